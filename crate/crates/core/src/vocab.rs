//! Multilingual terminology: thesaurus concepts, person and place
//! authorities, the prisoner-database concordance and query expansion.
//!
//! Thesaurus and authority files share one line format,
//! `id<TAB>field<TAB>language<TAB>value`; blank lines and `#` comments are
//! ignored. Concordance files are `databaseCode<TAB>localId<TAB>personId`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::archival::DateSpan;
use crate::registry::{Direction, EdgeLabel, Graph, NodeKind, Properties, RegistryError, Scalar, Value};
use crate::text::normalize;

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("malformed file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("concept `{concept}` lists unknown narrower concept `{narrower}`")]
    UnknownReference { concept: String, narrower: String },
    #[error("concept `{0}` has no preferred label")]
    MissingPrefLabel(String),
    #[error("narrower hierarchy has a cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("no person is registered for ({0}, {1})")]
    UnknownPair(String, String),
    #[error("({db}, {local}) is assigned to both `{first}` and `{second}`")]
    AmbiguousConcordance { db: String, local: String, first: String, second: String },
    #[error("unknown person `{0}`")]
    UnknownPerson(String),
    #[error("cannot merge `{0}` with itself")]
    IdenticalIds(String),
    #[error("invalid place `{id}`: {reason}")]
    InvalidPlace { id: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl VocabError {
    pub fn code(&self) -> &'static str {
        match self {
            VocabError::Malformed { .. } => "malformed-file",
            VocabError::UnknownReference { .. } => "unknown-reference",
            VocabError::MissingPrefLabel(_) => "missing-pref-label",
            VocabError::CycleDetected(_) => "cycle-detected",
            VocabError::UnknownPair(..) => "unknown-pair",
            VocabError::AmbiguousConcordance { .. } => "ambiguous-concordance",
            VocabError::UnknownPerson(_) => "unknown-id",
            VocabError::IdenticalIds(_) => "identical-ids",
            VocabError::InvalidPlace { .. } => "invalid-place",
            VocabError::Io { .. } => "io-failure",
            VocabError::Registry(e) => e.code(),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, VocabError> {
    fs::read_to_string(path).map_err(|source| VocabError::Io { path: path.display().to_string(), source })
}

/// One `id field language value` row with its source line.
#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub line: usize,
    pub id: String,
    pub field: String,
    pub language: String,
    pub value: String,
}

pub(crate) fn parse_rows(text: &str) -> Result<Vec<Row>, VocabError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, field, language, value] = fields.as_slice() else {
            return Err(VocabError::Malformed { line: lineno, reason: format!("expected 4 tab-separated fields, got {}", fields.len()) });
        };
        if id.trim().is_empty() {
            return Err(VocabError::Malformed { line: lineno, reason: "empty id".into() });
        }
        rows.push(Row {
            line: lineno,
            id: id.trim().to_string(),
            field: field.trim().to_string(),
            language: language.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelKind {
    Pref,
    Alt,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Concept {
    pub concept_id: String,
    pub pref_label: BTreeMap<String, String>,
    pub alt_labels: BTreeMap<String, Vec<String>>,
    pub definition: BTreeMap<String, String>,
    pub narrower: Vec<String>,
    /// Derived inverse of `narrower`.
    pub broader: Vec<String>,
}

impl Concept {
    /// `(language, kind, label)` for every label.
    pub fn labels(&self) -> impl Iterator<Item = (&str, LabelKind, &str)> {
        let pref = self.pref_label.iter().map(|(l, t)| (l.as_str(), LabelKind::Pref, t.as_str()));
        let alt = self
            .alt_labels
            .iter()
            .flat_map(|(l, ts)| ts.iter().map(move |t| (l.as_str(), LabelKind::Alt, t.as_str())));
        pref.chain(alt)
    }

    /// Display label: English, then any preferred label.
    pub fn display_label(&self) -> &str {
        self.pref_label
            .get("en")
            .or_else(|| self.pref_label.values().next())
            .map(String::as_str)
            .unwrap_or(&self.concept_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Thesaurus {
    concepts: BTreeMap<String, Concept>,
    /// normalized label → (concept, language, kind)
    labels: BTreeMap<String, BTreeSet<(String, String, LabelKind)>>,
}

impl Thesaurus {
    pub fn parse(text: &str) -> Result<Self, VocabError> {
        Self::from_rows(parse_rows(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::parse(&read_file(path)?)
    }

    /// Parses several files as one thesaurus.
    pub fn load_all(paths: &[impl AsRef<Path>]) -> Result<Self, VocabError> {
        let mut rows = Vec::new();
        for p in paths {
            rows.extend(parse_rows(&read_file(p.as_ref())?)?);
        }
        Self::from_rows(rows)
    }

    pub(crate) fn from_rows(rows: Vec<Row>) -> Result<Self, VocabError> {
        let mut concepts: BTreeMap<String, Concept> = BTreeMap::new();
        for row in rows {
            let c = concepts.entry(row.id.clone()).or_insert_with(|| Concept {
                concept_id: row.id.clone(),
                ..Concept::default()
            });
            let need_lang = || {
                if row.language.is_empty() || row.language == "-" {
                    Err(VocabError::Malformed { line: row.line, reason: format!("`{}` needs a language", row.field) })
                } else {
                    Ok(row.language.clone())
                }
            };
            if row.value.is_empty() {
                return Err(VocabError::Malformed { line: row.line, reason: "empty value".into() });
            }
            match row.field.as_str() {
                "prefLabel" => {
                    let lang = need_lang()?;
                    if c.pref_label.insert(lang.clone(), row.value.clone()).is_some() {
                        return Err(VocabError::Malformed {
                            line: row.line,
                            reason: format!("second prefLabel for `{}` in `{lang}`", row.id),
                        });
                    }
                }
                "altLabel" => c.alt_labels.entry(need_lang()?).or_default().push(row.value),
                "definition" => {
                    c.definition.insert(need_lang()?, row.value);
                }
                "narrower" => {
                    if !c.narrower.contains(&row.value) {
                        c.narrower.push(row.value);
                    }
                }
                other => {
                    return Err(VocabError::Malformed { line: row.line, reason: format!("unknown field `{other}`") })
                }
            }
        }
        Self::from_concepts(concepts)
    }

    /// Validates references, labels and acyclicity, then derives `broader`.
    pub fn from_concepts(mut concepts: BTreeMap<String, Concept>) -> Result<Self, VocabError> {
        for c in concepts.values() {
            if c.pref_label.is_empty() {
                return Err(VocabError::MissingPrefLabel(c.concept_id.clone()));
            }
            for n in &c.narrower {
                if !concepts.contains_key(n) {
                    return Err(VocabError::UnknownReference { concept: c.concept_id.clone(), narrower: n.clone() });
                }
            }
        }
        if let Some(cycle) = find_cycle(&concepts) {
            return Err(VocabError::CycleDetected(cycle));
        }
        let mut broader: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in concepts.values() {
            for n in &c.narrower {
                broader.entry(n.clone()).or_default().push(c.concept_id.clone());
            }
        }
        let mut labels: BTreeMap<String, BTreeSet<(String, String, LabelKind)>> = BTreeMap::new();
        for c in concepts.values_mut() {
            c.broader = broader.remove(&c.concept_id).unwrap_or_default();
            for (lang, kind, label) in c.labels() {
                labels.entry(normalize(label)).or_default().insert((c.concept_id.clone(), lang.to_string(), kind));
            }
        }
        Ok(Self { concepts, labels })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    /// Concepts with a label equal to `term` after normalization.
    pub fn lookup(&self, term: &str, language: Option<&str>) -> BTreeSet<String> {
        self.matches(&normalize(term), language).into_iter().map(|(c, _)| c).collect()
    }

    /// `(concept, strongest label kind)` for a normalized term.
    fn matches(&self, normalized: &str, language: Option<&str>) -> BTreeMap<String, LabelKind> {
        let mut out: BTreeMap<String, LabelKind> = BTreeMap::new();
        if let Some(hits) = self.labels.get(normalized) {
            for (concept, lang, kind) in hits {
                if language.is_none_or(|l| l == lang) {
                    let e = out.entry(concept.clone()).or_insert(*kind);
                    *e = (*e).min(*kind);
                }
            }
        }
        out
    }

    /// Narrower closure of `id` (excluding it), breadth-first with depth bound.
    pub fn narrower_closure(&self, id: &str, max_depth: Option<usize>) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([id.to_string()]);
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::from([(id.to_string(), 0usize)]);
        while let Some((current, depth)) = queue.pop_front() {
            if max_depth.is_some_and(|m| depth >= m) {
                continue;
            }
            let Some(c) = self.concepts.get(&current) else { continue };
            for n in &c.narrower {
                if seen.insert(n.clone()) {
                    out.insert(n.clone());
                    queue.push_back((n.clone(), depth + 1));
                }
            }
        }
        out
    }

    /// Normalized labels of `id` in `languages` (all languages when empty).
    pub fn labels_in(&self, id: &str, languages: &[String]) -> BTreeSet<String> {
        self.concepts
            .get(id)
            .map(|c| {
                c.labels()
                    .filter(|(l, _, _)| languages.is_empty() || languages.iter().any(|x| x == l))
                    .map(|(_, _, t)| normalize(t))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Translates and expands query terms.
    ///
    /// Each term is matched against every label in any language; matched
    /// concepts and their narrower closure contribute their labels in the
    /// requested languages. With unbounded depth, contributed labels are
    /// matched in turn until no new term appears, so the result is closed
    /// under re-expansion. A depth bound disables that re-matching; it would
    /// otherwise descend one more level per round.
    pub fn expand_query(&self, terms: &[String], languages: &[String], max_depth: Option<usize>) -> ExpandedQuery {
        let original_terms: Vec<String> = terms.iter().map(|t| normalize(t)).filter(|t| !t.is_empty()).collect();
        let mut expanded: BTreeSet<String> = original_terms.iter().cloned().collect();
        let mut matched = BTreeSet::new();
        let mut trace = Vec::new();
        let mut queue: VecDeque<String> = expanded.iter().cloned().collect();
        let mut done: BTreeSet<String> = BTreeSet::new();
        while let Some(term) = queue.pop_front() {
            if !done.insert(term.clone()) {
                continue;
            }
            for (concept, kind) in self.matches(&term, None) {
                let via = match kind {
                    LabelKind::Pref => Via::PrefLabel,
                    LabelKind::Alt => Via::AltLabel,
                };
                let reached = std::iter::once((concept.clone(), via))
                    .chain(self.narrower_closure(&concept, max_depth).into_iter().map(|c| (c, Via::NarrowerClosure)));
                for (cid, via) in reached {
                    matched.insert(cid.clone());
                    let labels: Vec<String> = self.labels_in(&cid, languages).into_iter().collect();
                    for label in &labels {
                        if expanded.insert(label.clone()) && max_depth.is_none() {
                            queue.push_back(label.clone());
                        }
                    }
                    trace.push(TraceStep { term: term.clone(), concept: cid, via, labels });
                }
            }
        }
        ExpandedQuery { original_terms, matched_concepts: matched, expanded_terms: expanded, trace }
    }

    /// Writes concepts as graph nodes with `narrower` edges. Concepts
    /// already present have their property maps replaced.
    pub fn write_to_graph(&self, graph: &mut Graph) -> Result<usize, RegistryError> {
        for c in self.concepts.values() {
            let mut props = Properties::new();
            for (lang, label) in &c.pref_label {
                props.insert(format!("prefLabel.{lang}"), Value::text(label));
            }
            for (lang, labels) in &c.alt_labels {
                props.insert(format!("altLabel.{lang}"), Value::texts(labels.iter().cloned()));
            }
            for (lang, def) in &c.definition {
                props.insert(format!("definition.{lang}"), Value::text(def));
            }
            graph.put_node(NodeKind::Concept, &c.concept_id, props)?;
        }
        for c in self.concepts.values() {
            for n in &c.narrower {
                graph.add_edge(&c.concept_id, EdgeLabel::Narrower, n, Properties::new())?;
            }
        }
        Ok(self.concepts.len())
    }

    /// Rebuilds the thesaurus from concept nodes and `narrower` edges.
    pub fn from_graph(graph: &Graph) -> Result<Self, VocabError> {
        let mut concepts = BTreeMap::new();
        for node in graph.nodes_of_kind(NodeKind::Concept) {
            let mut c = Concept { concept_id: node.id.clone(), ..Concept::default() };
            for (key, value) in &node.properties {
                let Some((field, lang)) = key.split_once('.') else { continue };
                match field {
                    "prefLabel" => {
                        c.pref_label.insert(lang.to_string(), value.as_text().unwrap_or_default().to_string());
                    }
                    "altLabel" => {
                        c.alt_labels.insert(lang.to_string(), value.as_texts());
                    }
                    "definition" => {
                        c.definition.insert(lang.to_string(), value.as_text().unwrap_or_default().to_string());
                    }
                    _ => {}
                }
            }
            c.narrower = graph.neighbor_ids(&node.id, EdgeLabel::Narrower, Direction::Out)?;
            concepts.insert(node.id.clone(), c);
        }
        Self::from_concepts(concepts)
    }
}

/// Depth-first search for a narrower cycle; returns the cycle path if any.
fn find_cycle(concepts: &BTreeMap<String, Concept>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        id: &str,
        concepts: &BTreeMap<String, Concept>,
        marks: &mut BTreeMap<String, Mark>,
        stack: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        match marks.get(id) {
            Some(Mark::Done) => return None,
            Some(Mark::Active) => {
                let start = stack.iter().position(|s| s == id).unwrap_or(0);
                let mut cycle = stack[start..].to_vec();
                cycle.push(id.to_string());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(id.to_string(), Mark::Active);
        stack.push(id.to_string());
        if let Some(c) = concepts.get(id) {
            for n in &c.narrower {
                if let Some(cycle) = visit(n, concepts, marks, stack) {
                    return Some(cycle);
                }
            }
        }
        stack.pop();
        marks.insert(id.to_string(), Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for id in concepts.keys() {
        let mut stack = Vec::new();
        if let Some(cycle) = visit(id, concepts, &mut marks, &mut stack) {
            return Some(cycle);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Via {
    PrefLabel,
    AltLabel,
    NarrowerClosure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceStep {
    pub term: String,
    pub concept: String,
    pub via: Via,
    /// Labels this concept contributed in the requested languages.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpandedQuery {
    pub original_terms: Vec<String>,
    pub matched_concepts: BTreeSet<String>,
    pub expanded_terms: BTreeSet<String>,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameType {
    Primary,
    Variant,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Name {
    pub text: String,
    pub language: String,
    #[serde(rename = "type")]
    pub kind: NameType,
}

impl Name {
    fn encode(&self) -> String {
        let kind = match self.kind {
            NameType::Primary => "primary",
            NameType::Variant => "variant",
        };
        format!("{kind}|{}|{}", self.language, self.text)
    }

    fn decode(s: &str) -> Option<Self> {
        let mut parts = s.splitn(3, '|');
        let kind = match parts.next()? {
            "primary" => NameType::Primary,
            "variant" => NameType::Variant,
            _ => return None,
        };
        Some(Name { kind, language: parts.next()?.to_string(), text: parts.next()?.to_string() })
    }
}

fn primary_name(names: &[Name], fallback: &str) -> String {
    names
        .iter()
        .find(|n| n.kind == NameType::Primary)
        .map(|n| n.text.clone())
        .unwrap_or_else(|| fallback.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PersonAuthority {
    pub person_id: String,
    pub names: Vec<Name>,
    pub life_dates: Option<DateSpan>,
    pub biography: Option<String>,
    pub concordance: BTreeSet<(String, String)>,
}

impl PersonAuthority {
    pub fn primary_name(&self) -> String {
        primary_name(&self.names, &self.person_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Geometry {
    Point,
    /// Closed ring of `[latitude, longitude]` vertices.
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaceAuthority {
    pub place_id: String,
    pub names: Vec<Name>,
    pub latitude: f64,
    pub longitude: f64,
    pub geometry: Geometry,
    pub within_place: Option<String>,
}

impl PlaceAuthority {
    pub fn primary_name(&self) -> String {
        primary_name(&self.names, &self.place_id)
    }

    pub fn check(&self) -> Result<(), VocabError> {
        let bad = |reason: String| VocabError::InvalidPlace { id: self.place_id.clone(), reason };
        let in_range = |lat: f64, lon: f64| (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon);
        if !in_range(self.latitude, self.longitude) {
            return Err(bad(format!("coordinates ({}, {}) out of range", self.latitude, self.longitude)));
        }
        if let Geometry::Polygon { vertices } = &self.geometry {
            if vertices.len() < 4 {
                return Err(bad("polygon needs at least 3 vertices plus the closing vertex".into()));
            }
            if vertices.first() != vertices.last() {
                return Err(bad("polygon ring is not closed".into()));
            }
            if let Some(v) = vertices.iter().find(|v| !in_range(v[0], v[1])) {
                return Err(bad(format!("vertex ({}, {}) out of range", v[0], v[1])));
            }
        }
        if !self.names.iter().any(|n| n.kind == NameType::Primary) {
            return Err(bad("no primary name".into()));
        }
        Ok(())
    }
}

fn parse_coord(line: usize, raw: &str) -> Result<[f64; 2], VocabError> {
    let bad = || VocabError::Malformed { line, reason: format!("bad coordinate pair `{raw}`") };
    let (a, b) = raw.split_once(',').ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

fn name_row(row: &Row, kind: NameType) -> Result<Name, VocabError> {
    if row.value.is_empty() {
        return Err(VocabError::Malformed { line: row.line, reason: "empty name".into() });
    }
    Ok(Name { text: row.value.clone(), language: row.language.clone(), kind })
}

/// Person and place authorities plus the concordance index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Authorities {
    persons: BTreeMap<String, PersonAuthority>,
    places: BTreeMap<String, PlaceAuthority>,
    concordance: BTreeMap<(String, String), String>,
    aliases: BTreeMap<String, String>,
}

impl Authorities {
    pub fn person(&self, id: &str) -> Option<&PersonAuthority> {
        self.persons.get(id)
    }

    pub fn persons(&self) -> impl Iterator<Item = &PersonAuthority> {
        self.persons.values()
    }

    pub fn place(&self, id: &str) -> Option<&PlaceAuthority> {
        self.places.get(id)
    }

    pub fn places(&self) -> impl Iterator<Item = &PlaceAuthority> {
        self.places.values()
    }

    /// Surviving id for an absorbed person id.
    pub fn alias(&self, id: &str) -> Option<&str> {
        self.aliases.get(id).map(String::as_str)
    }

    /// Parses a persons file: fields `name`, `variant`, `lifeDates`, `biography`.
    pub fn load_persons_str(&mut self, text: &str) -> Result<usize, VocabError> {
        let mut added: BTreeMap<String, PersonAuthority> = BTreeMap::new();
        for row in parse_rows(text)? {
            let p = added.entry(row.id.clone()).or_insert_with(|| PersonAuthority {
                person_id: row.id.clone(),
                names: Vec::new(),
                life_dates: None,
                biography: None,
                concordance: BTreeSet::new(),
            });
            match row.field.as_str() {
                "name" => p.names.push(name_row(&row, NameType::Primary)?),
                "variant" => p.names.push(name_row(&row, NameType::Variant)?),
                "lifeDates" => {
                    p.life_dates = Some(
                        row.value.parse().map_err(|e| VocabError::Malformed { line: row.line, reason: format!("{e}") })?,
                    )
                }
                "biography" => p.biography = Some(row.value.clone()),
                other => {
                    return Err(VocabError::Malformed { line: row.line, reason: format!("unknown person field `{other}`") })
                }
            }
        }
        for p in added.values() {
            if !p.names.iter().any(|n| n.kind == NameType::Primary) {
                return Err(VocabError::Malformed { line: 0, reason: format!("person `{}` has no primary name", p.person_id) });
            }
        }
        let n = added.len();
        for (id, mut p) in added {
            if let Some(old) = self.persons.remove(&id) {
                p.concordance = old.concordance;
            }
            self.persons.insert(id, p);
        }
        Ok(n)
    }

    /// Parses a places file: fields `name`, `variant`, `point` (`lat,lon`),
    /// `polygon` (`lat,lon;lat,lon;...`), `within`.
    pub fn load_places_str(&mut self, text: &str) -> Result<usize, VocabError> {
        let mut added: BTreeMap<String, (PlaceAuthority, bool)> = BTreeMap::new();
        for row in parse_rows(text)? {
            let (p, has_point) = added.entry(row.id.clone()).or_insert_with(|| {
                (
                    PlaceAuthority {
                        place_id: row.id.clone(),
                        names: Vec::new(),
                        latitude: 0.0,
                        longitude: 0.0,
                        geometry: Geometry::Point,
                        within_place: None,
                    },
                    false,
                )
            });
            match row.field.as_str() {
                "name" => p.names.push(name_row(&row, NameType::Primary)?),
                "variant" => p.names.push(name_row(&row, NameType::Variant)?),
                "point" => {
                    let [lat, lon] = parse_coord(row.line, &row.value)?;
                    p.latitude = lat;
                    p.longitude = lon;
                    *has_point = true;
                }
                "polygon" => {
                    let vertices = row
                        .value
                        .split(';')
                        .map(|v| parse_coord(row.line, v))
                        .collect::<Result<Vec<_>, _>>()?;
                    p.geometry = Geometry::Polygon { vertices };
                }
                "within" => p.within_place = Some(row.value.clone()),
                other => {
                    return Err(VocabError::Malformed { line: row.line, reason: format!("unknown place field `{other}`") })
                }
            }
        }
        for (p, has_point) in added.values() {
            if !has_point {
                return Err(VocabError::InvalidPlace { id: p.place_id.clone(), reason: "no point coordinates".into() });
            }
            p.check()?;
        }
        let n = added.len();
        for (id, (p, _)) in added {
            self.places.insert(id, p);
        }
        for p in self.places.values() {
            if let Some(w) = &p.within_place {
                if !self.places.contains_key(w) {
                    return Err(VocabError::InvalidPlace { id: p.place_id.clone(), reason: format!("unknown parent place `{w}`") });
                }
            }
        }
        Ok(n)
    }

    /// Loads `databaseCode localId personId` rows. The whole file is
    /// rejected if any pair would map to two persons.
    pub fn load_concordance_str(&mut self, text: &str) -> Result<usize, VocabError> {
        let mut staged = self.concordance.clone();
        let mut count = 0;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [db, local, person] = fields.as_slice() else {
                return Err(VocabError::Malformed { line: idx + 1, reason: "expected 3 tab-separated fields".into() });
            };
            let person = self.aliases.get(*person).map(String::as_str).unwrap_or(person);
            if !self.persons.contains_key(person) {
                return Err(VocabError::UnknownPerson(person.to_string()));
            }
            let key = (db.to_string(), local.to_string());
            match staged.get(&key) {
                Some(existing) if existing != person => {
                    return Err(VocabError::AmbiguousConcordance {
                        db: db.to_string(),
                        local: local.to_string(),
                        first: existing.clone(),
                        second: person.to_string(),
                    })
                }
                Some(_) => {}
                None => {
                    staged.insert(key, person.to_string());
                    count += 1;
                }
            }
        }
        self.concordance = staged;
        for p in self.persons.values_mut() {
            p.concordance.clear();
        }
        for ((db, local), person) in &self.concordance {
            if let Some(p) = self.persons.get_mut(person) {
                p.concordance.insert((db.clone(), local.clone()));
            }
        }
        Ok(count)
    }

    pub fn resolve_person(&self, database: &str, local_id: &str) -> Result<&PersonAuthority, VocabError> {
        self.concordance
            .get(&(database.to_string(), local_id.to_string()))
            .and_then(|id| self.persons.get(id))
            .ok_or_else(|| VocabError::UnknownPair(database.to_string(), local_id.to_string()))
    }

    /// Merges two persons into the lower id; the other id becomes an alias.
    /// Returns the survivor and the absorbed id.
    pub fn merge_persons(&mut self, a: &str, b: &str) -> Result<(PersonAuthority, String), VocabError> {
        if a == b {
            return Err(VocabError::IdenticalIds(a.to_string()));
        }
        for id in [a, b] {
            if !self.persons.contains_key(id) {
                return Err(VocabError::UnknownPerson(id.to_string()));
            }
        }
        let (keep, drop) = if a < b { (a, b) } else { (b, a) };
        let absorbed = self.persons.remove(drop).expect("checked");
        let survivor = self.persons.get_mut(keep).expect("checked");
        for mut name in absorbed.names {
            if survivor.names.iter().any(|n| n.text == name.text && n.language == name.language) {
                continue;
            }
            // only one primary name per language survives
            if name.kind == NameType::Primary
                && survivor.names.iter().any(|n| n.kind == NameType::Primary && n.language == name.language)
            {
                name.kind = NameType::Variant;
            }
            survivor.names.push(name);
        }
        survivor.life_dates = survivor.life_dates.or(absorbed.life_dates);
        if survivor.biography.is_none() {
            survivor.biography = absorbed.biography;
        }
        survivor.concordance.extend(absorbed.concordance.iter().cloned());
        for pair in absorbed.concordance {
            self.concordance.insert(pair, keep.to_string());
        }
        for target in self.aliases.values_mut() {
            if target == drop {
                *target = keep.to_string();
            }
        }
        self.aliases.insert(drop.to_string(), keep.to_string());
        Ok((self.persons[keep].clone(), drop.to_string()))
    }

    fn person_properties(p: &PersonAuthority) -> Properties {
        let mut props = Properties::new();
        props.insert("names".into(), Value::texts(p.names.iter().map(Name::encode)));
        props.insert(
            "concordance".into(),
            Value::texts(p.concordance.iter().map(|(db, local)| format!("{db}|{local}"))),
        );
        if let Some(d) = &p.life_dates {
            props.insert("lifeDates".into(), Value::text(d.to_string()));
        }
        if let Some(b) = &p.biography {
            props.insert("biography".into(), Value::text(b));
        }
        props
    }

    /// Writes persons, aliases and places as graph nodes.
    pub fn write_to_graph(&self, graph: &mut Graph) -> Result<(), RegistryError> {
        for p in self.persons.values() {
            graph.put_node(NodeKind::AuthorityPerson, &p.person_id, Self::person_properties(p))?;
        }
        for (alias, target) in &self.aliases {
            let mut props = Properties::new();
            props.insert("aliasOf".into(), Value::text(target));
            graph.put_node(NodeKind::AuthorityPerson, alias, props)?;
            graph.add_edge(alias, EdgeLabel::SameAs, target, Properties::new())?;
        }
        for p in self.places.values() {
            let mut props = Properties::new();
            props.insert("names".into(), Value::texts(p.names.iter().map(Name::encode)));
            props.insert("latitude".into(), Value::from(p.latitude));
            props.insert("longitude".into(), Value::from(p.longitude));
            if let Geometry::Polygon { vertices } = &p.geometry {
                props.insert("polygon".into(), Value::texts(vertices.iter().map(|[a, b]| format!("{a},{b}"))));
            }
            graph.put_node(NodeKind::AuthorityPlace, &p.place_id, props)?;
        }
        for p in self.places.values() {
            if let Some(w) = &p.within_place {
                graph.add_edge(&p.place_id, EdgeLabel::LocatedAt, w, Properties::new())?;
            }
        }
        Ok(())
    }

    pub fn from_graph(graph: &Graph) -> Result<Self, VocabError> {
        let mut out = Authorities::default();
        let bad = |id: &str, what: &str| VocabError::Malformed { line: 0, reason: format!("node `{id}`: bad {what}") };
        for node in graph.nodes_of_kind(NodeKind::AuthorityPerson) {
            if let Some(target) = node.text("aliasOf") {
                out.aliases.insert(node.id.clone(), target.to_string());
                continue;
            }
            let names = node
                .texts("names")
                .iter()
                .map(|s| Name::decode(s).ok_or_else(|| bad(&node.id, "name")))
                .collect::<Result<Vec<_>, _>>()?;
            let concordance: BTreeSet<(String, String)> = node
                .texts("concordance")
                .iter()
                .filter_map(|s| s.split_once('|').map(|(a, b)| (a.to_string(), b.to_string())))
                .collect();
            for pair in &concordance {
                out.concordance.insert(pair.clone(), node.id.clone());
            }
            let life_dates = match node.text("lifeDates") {
                Some(s) => Some(s.parse().map_err(|_| bad(&node.id, "lifeDates"))?),
                None => None,
            };
            out.persons.insert(
                node.id.clone(),
                PersonAuthority {
                    person_id: node.id.clone(),
                    names,
                    life_dates,
                    biography: node.text("biography").map(str::to_string),
                    concordance,
                },
            );
        }
        for node in graph.nodes_of_kind(NodeKind::AuthorityPlace) {
            let names = node
                .texts("names")
                .iter()
                .map(|s| Name::decode(s).ok_or_else(|| bad(&node.id, "name")))
                .collect::<Result<Vec<_>, _>>()?;
            let coord = |k: &str| node.properties.get(k).and_then(Value::as_f64).ok_or_else(|| bad(&node.id, k));
            let geometry = match node.properties.get("polygon") {
                Some(v) => Geometry::Polygon {
                    vertices: v.as_texts().iter().map(|s| parse_coord(0, s)).collect::<Result<_, _>>()?,
                },
                None => Geometry::Point,
            };
            out.places.insert(
                node.id.clone(),
                PlaceAuthority {
                    place_id: node.id.clone(),
                    names,
                    latitude: coord("latitude")?,
                    longitude: coord("longitude")?,
                    geometry,
                    within_place: graph.parent(&node.id, EdgeLabel::LocatedAt).map(str::to_string),
                },
            );
        }
        Ok(out)
    }
}

/// Re-points every graph reference to `absorbed` at `survivor`, keeping the
/// absorbed node only as a `sameAs` alias.
pub fn repoint_person(graph: &mut Graph, absorbed: &str, survivor: &str) -> Result<usize, RegistryError> {
    let touching: Vec<(String, EdgeLabel, String, Properties)> = graph
        .edges()
        .filter(|(k, _)| k.src == absorbed || k.dst == absorbed)
        .map(|(k, p)| (k.src.clone(), k.label, k.dst.clone(), p.clone()))
        .collect();
    let mut moved = 0;
    for (src, label, dst, props) in touching {
        if label == EdgeLabel::SameAs && ((src == absorbed && dst == survivor) || (dst == absorbed && src == survivor)) {
            continue;
        }
        graph.remove_edge(&src, label, &dst);
        let src = if src == absorbed { survivor.to_string() } else { src };
        let dst = if dst == absorbed { survivor.to_string() } else { dst };
        if src != dst {
            graph.add_edge(&src, label, &dst, props)?;
        }
        moved += 1;
    }
    let holders: Vec<String> = graph
        .nodes()
        .filter(|n| n.properties.values().any(|v| value_mentions(v, absorbed)))
        .map(|n| n.id.clone())
        .collect();
    for id in holders {
        let node = graph.node(&id).expect("listed").clone();
        let mut props = node.properties.clone();
        for (key, value) in props.iter_mut() {
            if key == "aliasOf" {
                continue;
            }
            if let Value::List(items) = value {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                for item in items.drain(..) {
                    let item = match item {
                        Scalar::Text(t) if t == absorbed => Scalar::Text(survivor.to_string()),
                        other => other,
                    };
                    let key = serde_json::to_string(&item).unwrap_or_default();
                    if seen.insert(key) {
                        out.push(item);
                    }
                }
                *items = out;
            } else if value.as_text() == Some(absorbed) {
                *value = Value::text(survivor);
            }
        }
        graph.put_node(node.kind, &id, props)?;
        moved += 1;
    }
    Ok(moved)
}

fn value_mentions(v: &Value, id: &str) -> bool {
    match v {
        Value::Scalar(s) => s.as_text() == Some(id),
        Value::List(items) => items.iter().any(|s| s.as_text() == Some(id)),
    }
}

/// Thesaurus and authorities as one immutable version.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    pub thesaurus: Thesaurus,
    pub authorities: Authorities,
}

impl Vocabulary {
    pub fn from_graph(graph: &Graph) -> Result<Self, VocabError> {
        Ok(Self { thesaurus: Thesaurus::from_graph(graph)?, authorities: Authorities::from_graph(graph)? })
    }

    /// Labels used when indexing a reference: concept labels in every
    /// language, or person/place names.
    pub fn reference_labels(&self, id: &str) -> Vec<String> {
        if let Some(c) = self.thesaurus.concept(id) {
            return c.labels().map(|(_, _, t)| t.to_string()).collect();
        }
        if let Some(p) = self.authorities.person(id) {
            return p.names.iter().map(|n| n.text.clone()).collect();
        }
        if let Some(p) = self.authorities.place(id) {
            return p.names.iter().map(|n| n.text.clone()).collect();
        }
        Vec::new()
    }
}
