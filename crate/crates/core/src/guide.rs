//! Research guides over a themed sub-corpus.
//!
//! A guide fixes a unit scope (repositories plus root units and their
//! descendants) and offers several independent access paths into it:
//! keyword and department trees, a place map, a timeline and person pages.
//! Cross-archive copies are suggested by title similarity and confirmed by
//! hand into `copyOf` edges.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::archival::{repository_of, DateSpan, PartialDate};
use crate::records::unit_from_node;
use crate::registry::{Direction, EdgeLabel, Graph, Node, NodeKind, Properties, RegistryError, Value};
use crate::text::{jaccard, trigrams};
use crate::vocab::{parse_rows, Geometry, Name, PersonAuthority, PlaceAuthority, Thesaurus, Vocabulary};

pub const DEFAULT_COPY_THRESHOLD: f64 = 0.85;
/// Similarity bonus for overlapping creation dates.
pub const DATE_BOOST: f64 = 0.1;

#[derive(Debug, thiserror::Error)]
pub enum GuideError {
    #[error("unknown references: {}", .0.join(", "))]
    UnknownReference(Vec<String>),
    #[error("range start {from} is after range end {to}")]
    InvalidRange { from: String, to: String },
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("no copy assertion for {0} and {1}")]
    UnknownAssertion(String, String),
    #[error("person `{0}` is not part of the guide")]
    UnknownPerson(String),
    #[error("invalid guide config: {0}")]
    InvalidConfig(String),
    #[error("invalid event `{id}`: {reason}")]
    InvalidEvent { id: String, reason: String },
    #[error("malformed file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl GuideError {
    pub fn code(&self) -> &'static str {
        match self {
            GuideError::UnknownReference(_) => "unknown-reference",
            GuideError::InvalidRange { .. } => "invalid-range",
            GuideError::InvalidThreshold(_) => "invalid-threshold",
            GuideError::UnknownAssertion(..) => "unknown-assertion",
            GuideError::UnknownPerson(_) => "unknown-person",
            GuideError::InvalidConfig(_) => "invalid-config",
            GuideError::InvalidEvent { .. } => "invalid-event",
            GuideError::Malformed { .. } => "malformed-file",
            GuideError::Io { .. } => "io-failure",
            GuideError::Registry(e) => e.code(),
        }
    }
}

fn read(path: &Path) -> Result<String, GuideError> {
    std::fs::read_to_string(path).map_err(|e| GuideError::Io { path: path.display().to_string(), reason: e.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Point,
    Period,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Event {
    pub event_id: String,
    /// language → label
    pub label: BTreeMap<String, String>,
    pub when: DateSpan,
    pub kind: EventKind,
    #[serde(default)]
    pub linked_units: Vec<String>,
    #[serde(default)]
    pub persons: Vec<String>,
}

impl Event {
    pub fn check(&self) -> Result<(), GuideError> {
        let bad = |reason: String| GuideError::InvalidEvent { id: self.event_id.clone(), reason };
        self.when.check().map_err(|e| bad(e.to_string()))?;
        if self.kind == EventKind::Period && self.when.end.is_none() {
            return Err(bad("period has no end date".into()));
        }
        if self.label.is_empty() {
            return Err(bad("no label".into()));
        }
        Ok(())
    }

    /// Sort key: start day, then coarser precision first, then id.
    fn order_key(&self) -> (chrono::NaiveDate, crate::archival::Precision, &str) {
        (self.when.earliest(), self.when.start.precision(), &self.event_id)
    }

    fn to_properties(&self) -> Properties {
        let mut props = Properties::new();
        for (lang, text) in &self.label {
            props.insert(format!("label.{lang}"), Value::text(text));
        }
        props.insert("when".into(), Value::text(self.when.to_string()));
        props.insert("kind".into(), Value::text(if self.kind == EventKind::Point { "point" } else { "period" }));
        props.insert("linkedUnits".into(), Value::texts(&self.linked_units));
        props.insert("persons".into(), Value::texts(&self.persons));
        props
    }

    fn from_node(node: &Node) -> Option<Event> {
        let label = node
            .properties
            .iter()
            .filter_map(|(k, v)| Some((k.strip_prefix("label.")?.to_string(), v.as_text()?.to_string())))
            .collect();
        let kind = match node.text("kind")? {
            "point" => EventKind::Point,
            "period" => EventKind::Period,
            _ => return None,
        };
        Some(Event {
            event_id: node.id.clone(),
            label,
            when: node.text("when")?.parse().ok()?,
            kind,
            linked_units: node.texts("linkedUnits"),
            persons: node.texts("persons"),
        })
    }
}

/// Parses an event file: tab-separated `id field language value` rows with
/// fields `label`, `when`, `kind`, `unit` and `person`.
pub fn parse_events(text: &str) -> Result<Vec<Event>, GuideError> {
    let rows = parse_rows(text).map_err(|e| match e {
        crate::vocab::VocabError::Malformed { line, reason } => GuideError::Malformed { line, reason },
        other => GuideError::InvalidConfig(other.to_string()),
    })?;
    let mut partial: BTreeMap<String, (BTreeMap<String, String>, Option<DateSpan>, Option<EventKind>, Vec<String>, Vec<String>)> =
        BTreeMap::new();
    for row in rows {
        let bad = |reason: String| GuideError::Malformed { line: row.line, reason };
        let entry = partial.entry(row.id.clone()).or_default();
        match row.field.as_str() {
            "label" => {
                entry.0.insert(row.language.clone(), row.value.clone());
            }
            "when" => entry.1 = Some(row.value.parse().map_err(|e: crate::archival::DateError| bad(e.to_string()))?),
            "kind" => {
                entry.2 = Some(match row.value.as_str() {
                    "point" => EventKind::Point,
                    "period" => EventKind::Period,
                    other => return Err(bad(format!("unknown event kind `{other}`"))),
                })
            }
            "unit" => entry.3.push(row.value.clone()),
            "person" => entry.4.push(row.value.clone()),
            other => return Err(bad(format!("unknown field `{other}`"))),
        }
    }
    let mut events = Vec::new();
    for (id, (label, when, kind, linked_units, persons)) in partial {
        let when = when.ok_or_else(|| GuideError::InvalidEvent { id: id.clone(), reason: "no date".into() })?;
        let kind = kind.unwrap_or(if when.end.is_some() { EventKind::Period } else { EventKind::Point });
        let event = Event { event_id: id, label, when, kind, linked_units, persons };
        event.check()?;
        events.push(event);
    }
    Ok(events)
}

pub fn load_events(path: &Path) -> Result<Vec<Event>, GuideError> {
    parse_events(&read(path)?)
}

/// Stores events as nodes, replacing earlier versions.
pub fn write_events(graph: &mut Graph, events: &[Event]) -> Result<usize, GuideError> {
    for event in events {
        event.check()?;
        graph.put_node(NodeKind::Event, &event.event_id, event.to_properties())?;
    }
    Ok(events.len())
}

pub fn events_in(graph: &Graph) -> Vec<Event> {
    graph.nodes_of_kind(NodeKind::Event).filter_map(Event::from_node).collect()
}

/// Declarative guide definition. Empty `places`, `events` and `persons`
/// lists select every entity of that kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuideConfig {
    pub guide_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub repositories: Vec<String>,
    #[serde(default)]
    pub root_units: Vec<String>,
    #[serde(default)]
    pub keyword_root: Option<String>,
    #[serde(default)]
    pub department_root: Option<String>,
    #[serde(default)]
    pub places: Vec<String>,
    #[serde(default)]
    pub events: Vec<String>,
    #[serde(default)]
    pub persons: Vec<String>,
}

impl GuideConfig {
    pub fn parse(text: &str) -> Result<Self, GuideError> {
        let config: GuideConfig = toml::from_str(text).map_err(|e| GuideError::InvalidConfig(e.to_string()))?;
        if config.guide_id.trim().is_empty() {
            return Err(GuideError::InvalidConfig("guide_id is empty".into()));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, GuideError> {
        Self::parse(&read(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("guide config is plain data")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeNode {
    pub concept_id: String,
    pub label: String,
    /// In-scope units linked directly to this concept.
    pub units: Vec<String>,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    /// Distinct units anywhere in the tree.
    pub fn all_units(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.units.iter().cloned().collect();
        for child in &self.children {
            out.extend(child.all_units());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AccessPath {
    KeywordTree,
    DepartmentTree,
    Map,
    Timeline,
    Person,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GuideStats {
    pub repositories: usize,
    pub units_in_scope: usize,
    /// Distinct in-scope units reachable through each access path.
    pub units_per_path: BTreeMap<AccessPath, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Guide {
    pub guide_id: String,
    pub title: String,
    pub repositories: Vec<String>,
    pub root_units: Vec<String>,
    pub keyword_tree_root: Option<String>,
    pub department_tree_root: Option<String>,
    pub place_set: Vec<String>,
    pub timeline: Vec<Event>,
    pub biographies: Vec<String>,
    /// Units in scope, ascending.
    pub scope: BTreeSet<String>,
    pub keyword_tree: Option<TreeNode>,
    pub department_tree: Option<TreeNode>,
    pub stats: GuideStats,
    pub graph_version: u64,
    #[serde(skip)]
    places: Vec<PlaceAuthority>,
    #[serde(skip)]
    persons: BTreeMap<String, PersonAuthority>,
    #[serde(skip)]
    aliases: BTreeMap<String, String>,
}

fn concept_tree(thesaurus: &Thesaurus, graph: &Graph, id: &str, label: EdgeLabel, scope: &BTreeSet<String>) -> TreeNode {
    let concept = thesaurus.concept(id).expect("root checked by caller");
    let units = graph
        .neighbor_ids(id, label, Direction::In)
        .unwrap_or_default()
        .into_iter()
        .filter(|u| scope.contains(u))
        .collect();
    let children = concept.narrower.iter().map(|n| concept_tree(thesaurus, graph, n, label, scope)).collect();
    TreeNode { concept_id: id.to_string(), label: concept.display_label().to_string(), units, children }
}

/// In-scope units pointing at a place via `aboutPlace` or `locatedAt`.
fn units_at_place(graph: &Graph, place: &str, scope: &BTreeSet<String>) -> Vec<String> {
    let mut units = BTreeSet::new();
    for label in [EdgeLabel::AboutPlace, EdgeLabel::LocatedAt] {
        units.extend(graph.neighbor_ids(place, label, Direction::In).unwrap_or_default().into_iter().filter(|u| scope.contains(u)));
    }
    units.into_iter().collect()
}

fn units_about_person(graph: &Graph, person: &str, scope: &BTreeSet<String>) -> Vec<String> {
    graph
        .neighbor_ids(person, EdgeLabel::AboutPerson, Direction::In)
        .unwrap_or_default()
        .into_iter()
        .filter(|u| scope.contains(u))
        .collect()
}

/// Assembles a guide against one graph version.
pub fn build_guide(graph: &Graph, vocab: &Vocabulary, config: &GuideConfig) -> Result<Guide, GuideError> {
    let mut missing = Vec::new();
    let has = |id: &str, kind: NodeKind| graph.node(id).is_some_and(|n| n.kind == kind);
    for r in &config.repositories {
        if !has(r, NodeKind::Repository) {
            missing.push(r.clone());
        }
    }
    for u in &config.root_units {
        if !has(u, NodeKind::Unit) {
            missing.push(u.clone());
        }
    }
    for root in config.keyword_root.iter().chain(&config.department_root) {
        if vocab.thesaurus.concept(root).is_none() {
            missing.push(root.clone());
        }
    }
    for p in &config.places {
        if vocab.authorities.place(p).is_none() {
            missing.push(p.clone());
        }
    }
    let person_of = |id: &str| vocab.authorities.person(vocab.authorities.alias(id).unwrap_or(id));
    for p in &config.persons {
        if person_of(p).is_none() {
            missing.push(p.clone());
        }
    }
    let all_events: BTreeMap<String, Event> = events_in(graph).into_iter().map(|e| (e.event_id.clone(), e)).collect();
    for e in &config.events {
        if !all_events.contains_key(e) {
            missing.push(e.clone());
        }
    }
    let selected: Vec<&Event> = if config.events.is_empty() {
        all_events.values().collect()
    } else {
        config.events.iter().filter_map(|e| all_events.get(e)).collect()
    };
    for event in &selected {
        for u in &event.linked_units {
            if !has(u, NodeKind::Unit) {
                missing.push(u.clone());
            }
        }
        for p in &event.persons {
            if person_of(p).is_none() {
                missing.push(p.clone());
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(GuideError::UnknownReference(missing));
    }

    let mut scope = BTreeSet::new();
    for r in &config.repositories {
        scope.extend(graph.neighbor_ids(r, EdgeLabel::HeldBy, Direction::In)?.into_iter().filter(|u| has(u, NodeKind::Unit)));
    }
    for root in &config.root_units {
        scope.insert(root.clone());
        scope.extend(graph.closure(root, EdgeLabel::PartOf, Direction::In, None)?);
    }

    let places: Vec<PlaceAuthority> = if config.places.is_empty() {
        vocab.authorities.places().cloned().collect()
    } else {
        config.places.iter().filter_map(|p| vocab.authorities.place(p).cloned()).collect()
    };
    let persons: BTreeMap<String, PersonAuthority> = if config.persons.is_empty() {
        vocab.authorities.persons().map(|p| (p.person_id.clone(), p.clone())).collect()
    } else {
        config.persons.iter().filter_map(|p| person_of(p)).map(|p| (p.person_id.clone(), p.clone())).collect()
    };
    let mut aliases = BTreeMap::new();
    for node in graph.nodes_of_kind(NodeKind::AuthorityPerson) {
        if let Some(target) = vocab.authorities.alias(&node.id) {
            if persons.contains_key(target) {
                aliases.insert(node.id.clone(), target.to_string());
            }
        }
    }
    let mut timeline: Vec<Event> = selected
        .into_iter()
        .map(|e| {
            let mut e = e.clone();
            e.linked_units.retain(|u| scope.contains(u));
            e
        })
        .collect();
    timeline.sort_by(|a, b| a.order_key().cmp(&b.order_key()));

    let keyword_tree = config.keyword_root.as_deref().map(|r| concept_tree(&vocab.thesaurus, graph, r, EdgeLabel::Subject, &scope));
    let department_tree =
        config.department_root.as_deref().map(|r| concept_tree(&vocab.thesaurus, graph, r, EdgeLabel::MemberOfDepartment, &scope));

    let mut per_path = BTreeMap::new();
    per_path.insert(AccessPath::KeywordTree, keyword_tree.as_ref().map_or(0, |t| t.all_units().len()));
    per_path.insert(AccessPath::DepartmentTree, department_tree.as_ref().map_or(0, |t| t.all_units().len()));
    let placed: BTreeSet<String> = places.iter().flat_map(|p| units_at_place(graph, &p.place_id, &scope)).collect();
    per_path.insert(AccessPath::Map, placed.len());
    let timed: BTreeSet<&String> = timeline.iter().flat_map(|e| &e.linked_units).collect();
    per_path.insert(AccessPath::Timeline, timed.len());
    let about: BTreeSet<String> = persons.keys().flat_map(|p| units_about_person(graph, p, &scope)).collect();
    per_path.insert(AccessPath::Person, about.len());

    let repositories: BTreeSet<&str> = scope.iter().filter_map(|u| repository_of(u)).chain(config.repositories.iter().map(String::as_str)).collect();
    let stats = GuideStats { repositories: repositories.len(), units_in_scope: scope.len(), units_per_path: per_path };

    Ok(Guide {
        guide_id: config.guide_id.clone(),
        title: config.title.clone(),
        repositories: config.repositories.clone(),
        root_units: config.root_units.clone(),
        keyword_tree_root: config.keyword_root.clone(),
        department_tree_root: config.department_root.clone(),
        place_set: places.iter().map(|p| p.place_id.clone()).collect(),
        timeline,
        biographies: persons.keys().cloned().collect(),
        scope,
        keyword_tree,
        department_tree,
        stats,
        graph_version: graph.version(),
        places,
        persons,
        aliases,
    })
}

impl Guide {
    /// Access paths through which a unit can be reached.
    pub fn access_paths(&self, graph: &Graph, unit: &str) -> BTreeSet<AccessPath> {
        let mut out = BTreeSet::new();
        if !self.scope.contains(unit) {
            return out;
        }
        if self.keyword_tree.as_ref().is_some_and(|t| t.all_units().contains(unit)) {
            out.insert(AccessPath::KeywordTree);
        }
        if self.department_tree.as_ref().is_some_and(|t| t.all_units().contains(unit)) {
            out.insert(AccessPath::DepartmentTree);
        }
        if self.places.iter().any(|p| units_at_place(graph, &p.place_id, &self.scope).iter().any(|u| u == unit)) {
            out.insert(AccessPath::Map);
        }
        if self.timeline.iter().any(|e| e.linked_units.iter().any(|u| u == unit)) {
            out.insert(AccessPath::Timeline);
        }
        if self.persons.keys().any(|p| units_about_person(graph, p, &self.scope).iter().any(|u| u == unit)) {
            out.insert(AccessPath::Person);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FeatureGeometry {
    /// `[longitude, latitude]`
    Point { coordinates: [f64; 2] },
    Polygon { coordinates: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureProperties {
    pub place_id: String,
    pub name: String,
    pub names: Vec<Name>,
    pub linked_unit_count: usize,
    pub linked_units: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    #[serde(rename = "type")]
    pub kind: String,
    pub id: String,
    pub geometry: FeatureGeometry,
    pub properties: FeatureProperties,
}

/// A GeoJSON feature collection with two extra members accounting for
/// every in-scope unit: `placedUnits` (linked to at least one feature) and
/// `unplacedUnits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureCollection {
    #[serde(rename = "type")]
    pub kind: String,
    pub features: Vec<Feature>,
    pub placed_units: usize,
    pub unplaced_units: usize,
}

pub fn map_features(guide: &Guide, graph: &Graph) -> FeatureCollection {
    let mut placed = BTreeSet::new();
    let features = guide
        .places
        .iter()
        .map(|p| {
            let linked = units_at_place(graph, &p.place_id, &guide.scope);
            placed.extend(linked.iter().cloned());
            let geometry = match &p.geometry {
                Geometry::Point => FeatureGeometry::Point { coordinates: [p.longitude, p.latitude] },
                Geometry::Polygon { vertices } => {
                    FeatureGeometry::Polygon { coordinates: vec![vertices.iter().map(|[lat, lon]| [*lon, *lat]).collect()] }
                }
            };
            Feature {
                kind: "Feature".into(),
                id: p.place_id.clone(),
                geometry,
                properties: FeatureProperties {
                    place_id: p.place_id.clone(),
                    name: p.primary_name(),
                    names: p.names.clone(),
                    linked_unit_count: linked.len(),
                    linked_units: linked,
                },
            }
        })
        .collect();
    FeatureCollection {
        kind: "FeatureCollection".into(),
        features,
        placed_units: placed.len(),
        unplaced_units: guide.scope.len() - placed.len(),
    }
}

/// Events overlapping `[from, to]` in timeline order.
pub fn timeline_query(guide: &Guide, from: PartialDate, to: PartialDate) -> Result<Vec<Event>, GuideError> {
    let range = DateSpan::between(from, to);
    if range.check().is_err() {
        return Err(GuideError::InvalidRange { from: from.to_string(), to: to.to_string() });
    }
    Ok(guide.timeline.iter().filter(|e| e.when.overlaps(&range)).cloned().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum CopyBasis {
    Asserted { source: String },
    Suggested { score: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopyStatus {
    Confirmed,
    Candidate,
}

/// An unordered unit pair, stored with `unit_a < unit_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CopyAssertion {
    pub unit_a: String,
    pub unit_b: String,
    pub basis: CopyBasis,
    pub status: CopyStatus,
}

impl CopyAssertion {
    pub fn pair(&self) -> (&str, &str) {
        (&self.unit_a, &self.unit_b)
    }

    pub fn involves(&self, unit: &str) -> bool {
        self.unit_a == unit || self.unit_b == unit
    }
}

fn ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Title trigram Jaccard plus [`DATE_BOOST`] when any creation dates
/// overlap, capped at 1.
pub fn similarity(title_a: &str, dates_a: &[DateSpan], title_b: &str, dates_b: &[DateSpan]) -> f64 {
    pair_similarity(&trigrams(title_a), dates_a, &trigrams(title_b), dates_b)
}

fn pair_similarity(a: &BTreeSet<String>, dates_a: &[DateSpan], b: &BTreeSet<String>, dates_b: &[DateSpan]) -> f64 {
    let mut score = jaccard(a, b);
    if dates_a.iter().any(|x| dates_b.iter().any(|y| x.overlaps(y))) {
        score += DATE_BOOST;
    }
    score.min(1.0)
}

/// Candidate copies among in-scope units of different repositories, by
/// (score desc, pair asc). Pairs already linked by `copyOf` are skipped.
pub fn suggest_copies(guide: &Guide, graph: &Graph, threshold: f64) -> Result<Vec<CopyAssertion>, GuideError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(GuideError::InvalidThreshold(threshold));
    }
    let units: Vec<(&str, &str, BTreeSet<String>, Vec<DateSpan>)> = guide
        .scope
        .iter()
        .filter_map(|id| {
            let unit = unit_from_node(graph.node(id)?, false)?;
            Some((id.as_str(), repository_of(id)?, trigrams(&unit.title), unit.dates_of_creation))
        })
        .filter(|u| !u.2.is_empty())
        .collect();
    let mut out = Vec::new();
    for (i, (a, repo_a, grams_a, dates_a)) in units.iter().enumerate() {
        for (b, repo_b, grams_b, dates_b) in &units[i + 1..] {
            if repo_a == repo_b || graph.linked(a, EdgeLabel::CopyOf, b) {
                continue;
            }
            let score = pair_similarity(grams_a, dates_a, grams_b, dates_b);
            if score >= threshold {
                let (x, y) = ordered(a, b);
                out.push(CopyAssertion {
                    unit_a: x.to_string(),
                    unit_b: y.to_string(),
                    basis: CopyBasis::Suggested { score },
                    status: CopyStatus::Candidate,
                });
            }
        }
    }
    out.sort_by(|x, y| match (&x.basis, &y.basis) {
        (CopyBasis::Suggested { score: s }, CopyBasis::Suggested { score: t }) => t.total_cmp(s).then_with(|| x.pair().cmp(&y.pair())),
        _ => x.pair().cmp(&y.pair()),
    });
    Ok(out)
}

fn confirmed_from_edge(graph: &Graph, a: &str, b: &str) -> Option<CopyAssertion> {
    let props = graph.edge(a, EdgeLabel::CopyOf, b).or_else(|| graph.edge(b, EdgeLabel::CopyOf, a))?;
    let (x, y) = ordered(a, b);
    Some(CopyAssertion {
        unit_a: x.to_string(),
        unit_b: y.to_string(),
        basis: CopyBasis::Asserted { source: props.get("source").and_then(Value::as_text).unwrap_or_default().to_string() },
        status: CopyStatus::Confirmed,
    })
}

/// Records a candidate as a `copyOf` edge. Confirming an existing link
/// returns it unchanged.
pub fn confirm_copy(
    graph: &mut Graph,
    candidates: &[CopyAssertion],
    unit_a: &str,
    unit_b: &str,
    source: &str,
) -> Result<CopyAssertion, GuideError> {
    if let Some(existing) = confirmed_from_edge(graph, unit_a, unit_b) {
        return Ok(existing);
    }
    let (x, y) = ordered(unit_a, unit_b);
    let candidate = candidates
        .iter()
        .find(|c| c.pair() == (x, y))
        .ok_or_else(|| GuideError::UnknownAssertion(x.to_string(), y.to_string()))?;
    let mut props = Properties::new();
    props.insert("source".into(), Value::text(source));
    if let CopyBasis::Suggested { score } = candidate.basis {
        props.insert("score".into(), Value::from(score));
    }
    graph.add_edge(x, EdgeLabel::CopyOf, y, props)?;
    Ok(CopyAssertion {
        unit_a: x.to_string(),
        unit_b: y.to_string(),
        basis: CopyBasis::Asserted { source: source.to_string() },
        status: CopyStatus::Confirmed,
    })
}

/// Confirmed copy links touching the guide scope.
pub fn confirmed_copies(guide: &Guide, graph: &Graph) -> Vec<CopyAssertion> {
    let mut out = Vec::new();
    for (key, _) in graph.edges().filter(|(k, _)| k.label == EdgeLabel::CopyOf) {
        if guide.scope.contains(&key.src) || guide.scope.contains(&key.dst) {
            out.extend(confirmed_from_edge(graph, &key.src, &key.dst));
        }
    }
    out.sort_by(|x, y| x.pair().cmp(&y.pair()));
    out.dedup_by(|x, y| x.pair() == y.pair());
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Biography {
    pub person: PersonAuthority,
    pub linked_units: Vec<String>,
    pub events: Vec<Event>,
}

/// Person record with the in-scope units about them and events naming
/// them. Alias ids resolve to their surviving record.
pub fn biography(guide: &Guide, graph: &Graph, person_id: &str) -> Result<Biography, GuideError> {
    let id = guide.aliases.get(person_id).map(String::as_str).unwrap_or(person_id);
    let person = guide.persons.get(id).ok_or_else(|| GuideError::UnknownPerson(person_id.to_string()))?;
    let mentions = |e: &&Event| e.persons.iter().any(|p| p == id || guide.aliases.get(p).is_some_and(|t| t == id));
    Ok(Biography {
        person: person.clone(),
        linked_units: units_about_person(graph, id, &guide.scope),
        events: guide.timeline.iter().filter(mentions).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archival::{DocumentaryUnit, Level, Repository};
    use crate::ingest::{import_batch, import_repositories, UnitTree};
    use crate::vocab::{Authorities, Thesaurus};

    const THESAURUS: &str = "\
kw-root\tprefLabel\ten\tTopics
kw-root\tnarrower\t\tkw-bulletins
kw-bulletins\tprefLabel\ten\tDaily bulletins
kw-bulletins\tprefLabel\tde\tTagesbefehl
dept-root\tprefLabel\ten\tDepartments
dept-root\tnarrower\t\tdept-tech
dept-tech\tprefLabel\ten\tTechnical Department
";

    const PLACES: &str = "\
pl-mb\tname\ten\tMagdeburg Barracks
pl-mb\tpoint\t\t50.5126,14.1497
pl-sq\tname\ten\tMarket Square
pl-sq\tpoint\t\t50.5106,14.1503
";

    const PERSONS: &str = "\
p-scheck\tname\ten\tZeev Scheck
p-other\tname\ten\tNobody Linked
";

    const EVENTS: &str = "\
ev-lib\tlabel\ten\tLiberation
ev-lib\twhen\t\t1945-05
ev-lib\tunit\t\tjmp/1
ev-lib\tperson\t\tp-scheck
ev-day\tlabel\ten\tBulletin issued
ev-day\twhen\t\t1945-05-08
ev-ghetto\tlabel\ten\tGhetto period
ev-ghetto\twhen\t\t1941-11-24/1945-05-09
ev-ghetto\tunit\t\tyv/9
";

    fn repo(id: &str) -> Repository {
        Repository {
            ehri_id: id.into(),
            authorized_form_of_name: id.to_uppercase(),
            other_names: vec![],
            country: "CZ".into(),
            address: "Street 1".into(),
            contact: String::new(),
            description_status: Default::default(),
            holdings_summary: String::new(),
            harvest_endpoint: None,
            harvest_capable: false,
        }
    }

    fn unit(id: &str, title: &str, date: &str) -> DocumentaryUnit {
        let mut u = DocumentaryUnit::new(id, Level::File, title);
        if date.is_empty() {
            u.undated = true;
        } else {
            u.dates_of_creation.push(date.parse().unwrap());
        }
        u
    }

    fn fixture() -> (Graph, Vocabulary) {
        let mut g = Graph::new();
        let thesaurus = Thesaurus::parse(THESAURUS).unwrap();
        let mut authorities = Authorities::default();
        authorities.load_places_str(PLACES).unwrap();
        authorities.load_persons_str(PERSONS).unwrap();
        thesaurus.write_to_graph(&mut g).unwrap();
        authorities.write_to_graph(&mut g).unwrap();
        import_repositories(&mut g, &[repo("jmp"), repo("yv"), repo("bt")]);

        let mut bulletin = unit("1", "Tagesbefehl 1.5.1944", "1944-05-01");
        bulletin.keywords.push("kw-bulletins".into());
        bulletin.departments.push("dept-tech".into());
        bulletin.places.push("pl-mb".into());
        bulletin.persons.push("p-scheck".into());
        let mut child = unit("2", "Attachment", "");
        child.parent = Some("1".into());
        child.places.push("pl-mb".into());
        let tree = UnitTree { source_ref: "1".into(), unit: bulletin, children: vec![UnitTree::leaf("2", child)] };
        import_batch(&mut g, &[tree], "jmp").unwrap();

        let mut yv = unit("9", "Tagesbefehl 1. 5. 1944", "1944-05");
        yv.places.push("pl-sq".into());
        import_batch(&mut g, &[UnitTree::leaf("9", yv), UnitTree::leaf("10", unit("10", "Transport list AAq", ""))], "yv").unwrap();
        import_batch(&mut g, &[UnitTree::leaf("5", unit("5", "Tagesbefehl 1.5.1944", ""))], "bt").unwrap();
        write_events(&mut g, &parse_events(EVENTS).unwrap()).unwrap();
        let vocab = Vocabulary::from_graph(&g).unwrap();
        (g, vocab)
    }

    fn config() -> GuideConfig {
        GuideConfig {
            guide_id: "terezin".into(),
            repositories: vec!["jmp".into(), "yv".into()],
            keyword_root: Some("kw-root".into()),
            department_root: Some("dept-root".into()),
            ..Default::default()
        }
    }

    #[test]
    fn scope_and_paths() {
        let (g, vocab) = fixture();
        let guide = build_guide(&g, &vocab, &config()).unwrap();
        let scope: Vec<_> = guide.scope.iter().map(String::as_str).collect();
        assert_eq!(scope, vec!["jmp/1", "jmp/2", "yv/10", "yv/9"]);
        assert_eq!(guide.stats.repositories, 2);
        assert_eq!(guide.stats.units_per_path[&AccessPath::KeywordTree], 1);
        assert_eq!(guide.stats.units_per_path[&AccessPath::Map], 3);
        let paths = guide.access_paths(&g, "jmp/1");
        assert!(paths.contains(&AccessPath::KeywordTree) && paths.contains(&AccessPath::DepartmentTree));
        assert!(guide.access_paths(&g, "bt/5").is_empty(), "out of scope");

        let mut by_root = config();
        by_root.repositories.clear();
        by_root.root_units = vec!["jmp/1".into()];
        let guide = build_guide(&g, &vocab, &by_root).unwrap();
        assert_eq!(guide.scope.len(), 2);
        // the event on yv/9 loses its out-of-scope unit
        assert!(guide.timeline.iter().find(|e| e.event_id == "ev-ghetto").unwrap().linked_units.is_empty());
    }

    #[test]
    fn empty_scope_and_missing_references() {
        let (g, vocab) = fixture();
        let empty = build_guide(&g, &vocab, &GuideConfig { guide_id: "x".into(), ..Default::default() }).unwrap();
        assert!(empty.scope.is_empty());
        assert_eq!(map_features(&empty, &g).unplaced_units, 0);

        let mut bad = config();
        bad.places = vec!["pl-mb".into(), "pl-nowhere".into()];
        bad.repositories.push("zz".into());
        let err = build_guide(&g, &vocab, &bad).unwrap_err();
        assert_eq!(err.code(), "unknown-reference");
        let GuideError::UnknownReference(ids) = err else { unreachable!() };
        assert_eq!(ids, vec!["pl-nowhere", "zz"]);
    }

    #[test]
    fn map_counts_and_conservation() {
        let (g, vocab) = fixture();
        let guide = build_guide(&g, &vocab, &config()).unwrap();
        let map = map_features(&guide, &g);
        let mb = map.features.iter().find(|f| f.id == "pl-mb").unwrap();
        assert_eq!(mb.properties.linked_unit_count, 2);
        assert_eq!(mb.geometry, FeatureGeometry::Point { coordinates: [14.1497, 50.5126] });
        let total: usize = map.features.iter().map(|f| f.properties.linked_unit_count).sum();
        assert_eq!(total + map.unplaced_units, guide.scope.len());
        let json = serde_json::to_value(&map).unwrap();
        assert_eq!(json["type"], "FeatureCollection");
        assert_eq!(json["features"][0]["geometry"]["type"], "Point");
    }

    #[test]
    fn timeline_order_and_range() {
        let (g, vocab) = fixture();
        let guide = build_guide(&g, &vocab, &config()).unwrap();
        let ids = |v: Vec<Event>| v.into_iter().map(|e| e.event_id).collect::<Vec<_>>();
        let all = timeline_query(&guide, PartialDate::year(1945), PartialDate::year(1945)).unwrap();
        // month precision before day precision within the same month
        assert_eq!(ids(all), vec!["ev-ghetto", "ev-lib", "ev-day"]);
        assert!(timeline_query(&guide, PartialDate::year(1900), PartialDate::year(1901)).unwrap().is_empty());
        let err = timeline_query(&guide, PartialDate::year(1946), PartialDate::year(1945)).unwrap_err();
        assert_eq!(err.code(), "invalid-range");
    }

    #[test]
    fn period_needs_end() {
        let err = parse_events("e\tlabel\ten\tX\ne\twhen\t\t1944\ne\tkind\t\tperiod\n").unwrap_err();
        assert_eq!(err.code(), "invalid-event");
    }

    #[test]
    fn copies_suggest_then_confirm() {
        let (mut g, vocab) = fixture();
        let mut cfg = config();
        cfg.repositories.push("bt".into());
        let guide = build_guide(&g, &vocab, &cfg).unwrap();
        let candidates = suggest_copies(&guide, &g, DEFAULT_COPY_THRESHOLD).unwrap();
        let pairs: Vec<_> = candidates.iter().map(|c| c.pair()).collect();
        assert!(pairs.contains(&("bt/5", "jmp/1")));
        assert!(pairs.iter().all(|(a, b)| repository_of(a) != repository_of(b)));
        assert_eq!(candidates[0].basis, CopyBasis::Suggested { score: 1.0 });
        assert_eq!(suggest_copies(&guide, &g, 0.0).unwrap_err().code(), "invalid-threshold");

        let confirmed = confirm_copy(&mut g, &candidates, "jmp/1", "bt/5", "curator").unwrap();
        assert_eq!(confirmed.status, CopyStatus::Confirmed);
        assert!(g.linked("jmp/1", EdgeLabel::CopyOf, "bt/5") && g.linked("bt/5", EdgeLabel::CopyOf, "jmp/1"));
        let version = g.version();
        assert_eq!(confirm_copy(&mut g, &candidates, "bt/5", "jmp/1", "again").unwrap(), confirmed);
        assert_eq!(g.version(), version);
        assert!(!suggest_copies(&guide, &g, DEFAULT_COPY_THRESHOLD).unwrap().iter().any(|c| c.pair() == ("bt/5", "jmp/1")));
        assert_eq!(confirm_copy(&mut g, &candidates, "jmp/2", "yv/10", "x").unwrap_err().code(), "unknown-assertion");
        assert_eq!(confirmed_copies(&guide, &g).len(), 1);
    }

    #[test]
    fn biographies() {
        let (g, vocab) = fixture();
        let guide = build_guide(&g, &vocab, &config()).unwrap();
        let bio = biography(&guide, &g, "p-scheck").unwrap();
        assert_eq!(bio.linked_units, vec!["jmp/1"]);
        assert_eq!(bio.events.len(), 1);
        let lonely = biography(&guide, &g, "p-other").unwrap();
        assert!(lonely.linked_units.is_empty());
        assert_eq!(biography(&guide, &g, "p-none").unwrap_err().code(), "unknown-person");
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = config();
        cfg.places = vec!["pl-mb".into()];
        assert_eq!(GuideConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(GuideConfig::parse("title = \"x\"").unwrap_err().code(), "invalid-config");
    }
}
