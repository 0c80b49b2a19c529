use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IngestError, ParsedBatch, Rejection, UnitTree, Warning};
use crate::archival::{global_id, validate_repository, validate_unit, DocumentaryUnit, Repository, ValidationReport};
use crate::records::{has_promoted_content, institution_properties, repository_properties, unit_properties};
use crate::registry::{Direction, EdgeLabel, Graph, NodeKind, Properties, Upsert, Value};
use crate::text::normalize;
use crate::vocab::Vocabulary;

/// Provenance value on edges derived from institution data.
pub const CHI_SOURCE: &str = "chi";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImportReport {
    pub repository: String,
    pub created: usize,
    pub updated: usize,
    pub unchanged: usize,
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<Warning>,
    pub batch_checksum: String,
    /// Global ids written by this batch, in processing order.
    pub imported: Vec<String>,
}

impl ImportReport {
    pub fn total(&self) -> usize {
        self.created + self.updated + self.unchanged + self.rejected.len()
    }
}

fn chi_props() -> Properties {
    Properties::from([("source".to_string(), Value::text(CHI_SOURCE))])
}

/// Resolves free-text references in institution data to vocabulary ids.
pub struct References<'a> {
    vocab: &'a Vocabulary,
    person_names: BTreeMap<String, BTreeSet<String>>,
    place_names: BTreeMap<String, BTreeSet<String>>,
}

impl<'a> References<'a> {
    pub fn new(vocab: &'a Vocabulary) -> Self {
        let mut person_names: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for p in vocab.authorities.persons() {
            for n in &p.names {
                person_names.entry(normalize(&n.text)).or_default().insert(p.person_id.clone());
            }
        }
        let mut place_names: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for p in vocab.authorities.places() {
            for n in &p.names {
                place_names.entry(normalize(&n.text)).or_default().insert(p.place_id.clone());
            }
        }
        Self { vocab, person_names, place_names }
    }

    /// A concept id, or a label matching exactly one concept.
    pub fn concept(&self, raw: &str) -> Option<String> {
        if self.vocab.thesaurus.concept(raw).is_some() {
            return Some(raw.to_string());
        }
        unique(self.vocab.thesaurus.lookup(raw, None))
    }

    /// A person id, an absorbed alias, a `DB:localId` concordance pair, or
    /// a name matching exactly one person.
    pub fn person(&self, raw: &str) -> Option<String> {
        let auth = &self.vocab.authorities;
        if let Some(survivor) = auth.alias(raw) {
            return Some(survivor.to_string());
        }
        if auth.person(raw).is_some() {
            return Some(raw.to_string());
        }
        if let Some((db, local)) = raw.split_once(':') {
            if let Ok(p) = auth.resolve_person(db.trim(), local.trim()) {
                return Some(p.person_id.clone());
            }
        }
        self.person_names.get(&normalize(raw)).cloned().and_then(unique)
    }

    pub fn place(&self, raw: &str) -> Option<String> {
        if self.vocab.authorities.place(raw).is_some() {
            return Some(raw.to_string());
        }
        self.place_names.get(&normalize(raw)).cloned().and_then(unique)
    }
}

fn unique(set: BTreeSet<String>) -> Option<String> {
    if set.len() == 1 {
        set.into_iter().next()
    } else {
        None
    }
}

/// SHA-256 over the repository code and the units in pre-order, ignoring
/// source positions.
pub fn batch_checksum(repository: &str, trees: &[UnitTree]) -> String {
    let units: Vec<&DocumentaryUnit> = trees.iter().flat_map(UnitTree::units).collect();
    let canonical = serde_json::to_string(&(repository, units)).expect("units serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

struct Entry {
    source_ref: String,
    unit: DocumentaryUnit,
}

fn flatten(tree: &UnitTree, repository: &str, parent: Option<&str>, out: &mut Vec<Entry>) {
    let mut unit = tree.unit.clone();
    unit.global_id = global_id(repository, &unit.local_id);
    unit.parent = match parent {
        Some(p) => Some(p.to_string()),
        None => unit.parent.map(|p| global_id(repository, &p)),
    };
    let id = unit.global_id.clone();
    out.push(Entry { source_ref: tree.source_ref.clone(), unit });
    for child in &tree.children {
        flatten(child, repository, Some(&id), out);
    }
}

fn rejection(source_ref: &str, subject: &str, code: &str, path: &str, message: String) -> Rejection {
    let mut report = ValidationReport::new(subject);
    report.error(code, path, message);
    Rejection { source_ref: source_ref.to_string(), report }
}

/// Imports parsed trees for `repository` (see [`import_parsed`]).
pub fn import_batch(graph: &mut Graph, trees: &[UnitTree], repository: &str) -> Result<ImportReport, IngestError> {
    let batch = ParsedBatch { trees: trees.to_vec(), ..ParsedBatch::default() };
    import_parsed(graph, &batch, repository)
}

/// Upserts every unit by global id, with per-record quarantine: a rejected
/// unit takes its descendants with it, everything else is written. Records
/// quarantined at parse time are carried into the report.
pub fn import_parsed(graph: &mut Graph, batch: &ParsedBatch, repository: &str) -> Result<ImportReport, IngestError> {
    if graph.node(repository).is_none_or(|n| n.kind != NodeKind::Repository) {
        return Err(IngestError::UnknownRepository(repository.to_string()));
    }
    let vocab = Vocabulary::from_graph(graph).unwrap_or_default();
    let refs = References::new(&vocab);
    let mut report = ImportReport {
        repository: repository.to_string(),
        rejected: batch.rejected.clone(),
        warnings: batch.warnings.clone(),
        batch_checksum: batch_checksum(repository, &batch.trees),
        ..ImportReport::default()
    };

    let mut entries = Vec::new();
    for tree in &batch.trees {
        flatten(tree, repository, None, &mut entries);
    }
    let mut first_index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        first_index.entry(e.unit.global_id.clone()).or_insert(i);
    }

    // parents before children, also for flat tables with parent columns
    let mut order = Vec::with_capacity(entries.len());
    let mut state = vec![0u8; entries.len()];
    let mut cyclic = BTreeSet::new();
    for i in 0..entries.len() {
        visit(i, &entries, &first_index, &mut state, &mut order, &mut cyclic);
    }

    let mut rejected_ids: BTreeSet<String> = BTreeSet::new();
    for i in order {
        let Entry { source_ref, unit } = &entries[i];
        let id = unit.global_id.as_str();
        let reject = |code: &str, path: &str, message: String| rejection(source_ref, id, code, path, message);

        let outcome = if first_index.get(id) != Some(&i) {
            Err(reject("duplicate-id", "localId", format!("`{}` appears more than once in the batch", unit.local_id)))
        } else if cyclic.contains(&i) {
            Err(reject("partOf-cycle", "parent", "parent references form a cycle".into()))
        } else {
            let validation = validate_unit(unit);
            if validation.has_errors() {
                Err(Rejection { source_ref: source_ref.clone(), report: validation })
            } else {
                check_placement(graph, unit, &first_index, &rejected_ids).map_err(|(code, msg)| reject(code, "parent", msg))
            }
        };
        if let Err(r) = outcome {
            rejected_ids.insert(id.to_string());
            report.rejected.push(r);
            continue;
        }

        match write_unit(graph, unit, repository, &refs, source_ref, &mut report.warnings) {
            Ok(Upsert::Created) => report.created += 1,
            Ok(Upsert::Updated) => report.updated += 1,
            Ok(Upsert::Unchanged) => report.unchanged += 1,
            Err(e) => {
                rejected_ids.insert(id.to_string());
                report.rejected.push(reject(e.code(), "globalId", e.to_string()));
                continue;
            }
        }
        report.imported.push(id.to_string());
    }
    tracing::info!(
        repository,
        created = report.created,
        updated = report.updated,
        unchanged = report.unchanged,
        rejected = report.rejected.len(),
        "batch imported"
    );
    Ok(report)
}

fn visit(
    i: usize,
    entries: &[Entry],
    first_index: &BTreeMap<String, usize>,
    state: &mut [u8],
    order: &mut Vec<usize>,
    cyclic: &mut BTreeSet<usize>,
) {
    match state[i] {
        2 => return,
        1 => {
            cyclic.insert(i);
            return;
        }
        _ => {}
    }
    state[i] = 1;
    if let Some(p) = entries[i].unit.parent.as_ref().and_then(|p| first_index.get(p)) {
        if *p != i {
            visit(*p, entries, first_index, state, order, cyclic);
            if cyclic.contains(p) {
                cyclic.insert(i);
            }
        }
    }
    state[i] = 2;
    order.push(i);
}

fn check_placement(
    graph: &Graph,
    unit: &DocumentaryUnit,
    batch: &BTreeMap<String, usize>,
    rejected: &BTreeSet<String>,
) -> Result<(), (&'static str, String)> {
    if let Some(node) = graph.node(&unit.global_id) {
        if node.kind != NodeKind::Unit {
            return Err(("kind-conflict", format!("`{}` already exists as a {}", unit.global_id, node.kind)));
        }
    }
    let Some(parent) = unit.parent.as_deref() else { return Ok(()) };
    if rejected.contains(parent) {
        return Err(("ancestor-rejected", format!("parent `{parent}` was rejected")));
    }
    if batch.contains_key(parent) {
        return Ok(());
    }
    match graph.node(parent) {
        Some(n) if n.kind == NodeKind::Unit => Ok(()),
        _ => Err(("unknown-parent", format!("parent `{parent}` is neither in the batch nor in the registry"))),
    }
}

fn write_unit(
    graph: &mut Graph,
    unit: &DocumentaryUnit,
    repository: &str,
    refs: &References<'_>,
    source_ref: &str,
    warnings: &mut Vec<Warning>,
) -> Result<Upsert, crate::registry::RegistryError> {
    let id = unit.global_id.as_str();
    let props = unit_properties(unit);
    let previous = graph.node(id).map(|n| (institution_properties(n) == props, has_promoted_content(n)));

    // re-parent before touching properties so a cycle leaves the unit as it was
    let old_parent = graph.parent(id, EdgeLabel::PartOf).map(str::to_string);
    if previous.is_some() && old_parent != unit.parent {
        if let Some(old) = &old_parent {
            graph.remove_edge(id, EdgeLabel::PartOf, old);
        }
        if let Some(new) = &unit.parent {
            if let Err(e) = graph.add_edge(id, EdgeLabel::PartOf, new, chi_props()) {
                if let Some(old) = &old_parent {
                    graph.add_edge(id, EdgeLabel::PartOf, old, chi_props())?;
                }
                return Err(e);
            }
        }
    }
    let outcome = graph.upsert_node(NodeKind::Unit, id, props)?;
    if previous.is_none() {
        if let Some(parent) = &unit.parent {
            graph.add_edge(id, EdgeLabel::PartOf, parent, chi_props())?;
        }
    }
    if let Some((false, true)) = previous {
        warnings.push(Warning {
            source_ref: source_ref.to_string(),
            code: "annotation-conflict".into(),
            message: format!("`{id}` changed at source and carries accepted annotations; annotations kept"),
        });
    }
    graph.add_edge(id, EdgeLabel::HeldBy, repository, chi_props())?;

    let mut unresolved = Vec::new();
    let mut targets = |items: &[String], resolve: &dyn Fn(&str) -> Option<String>| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for item in items {
            match resolve(item) {
                Some(t) => {
                    out.insert(t);
                }
                None => unresolved.push(item.clone()),
            }
        }
        out
    };
    let links = [
        (EdgeLabel::Subject, targets(&unit.keywords, &|r| refs.concept(r))),
        (EdgeLabel::MemberOfDepartment, targets(&unit.departments, &|r| refs.concept(r))),
        (EdgeLabel::AboutPerson, targets(&unit.persons, &|r| refs.person(r))),
        (EdgeLabel::AboutPlace, targets(&unit.places, &|r| refs.place(r))),
    ];
    for (label, wanted) in links {
        sync_edges(graph, id, label, &wanted)?;
    }
    for item in unresolved {
        warnings.push(Warning {
            source_ref: source_ref.to_string(),
            code: "unresolved-reference".into(),
            message: format!("`{item}` on `{id}` matches no vocabulary entry"),
        });
    }
    Ok(outcome)
}

/// Makes the institution-sourced edges of `label` equal `wanted`, leaving
/// edges of other provenance alone.
fn sync_edges(graph: &mut Graph, id: &str, label: EdgeLabel, wanted: &BTreeSet<String>) -> Result<(), crate::registry::RegistryError> {
    for current in graph.neighbor_ids(id, label, Direction::Out)? {
        let from_chi = graph.edge(id, label, &current).and_then(|p| p.get("source")).and_then(Value::as_text) == Some(CHI_SOURCE);
        if from_chi && !wanted.contains(&current) {
            graph.remove_edge(id, label, &current);
        }
    }
    for target in wanted {
        if graph.contains(target) {
            graph.add_edge(id, label, target, chi_props())?;
        }
    }
    Ok(())
}

/// Upserts repository records; invalid or duplicate ones are rejected.
pub fn import_repositories(graph: &mut Graph, repositories: &[Repository]) -> ImportReport {
    let mut report = ImportReport {
        batch_checksum: hex::encode(Sha256::digest(serde_json::to_string(repositories).expect("serialize").as_bytes())),
        ..ImportReport::default()
    };
    let mut seen = BTreeSet::new();
    for (i, repo) in repositories.iter().enumerate() {
        let source_ref = format!("record {}", i + 1);
        if !seen.insert(repo.ehri_id.clone()) {
            report.rejected.push(rejection(&source_ref, &repo.ehri_id, "duplicate-id", "ehriId", format!("`{}` appears more than once", repo.ehri_id)));
            continue;
        }
        let validation = validate_repository(repo);
        if validation.has_errors() {
            report.rejected.push(Rejection { source_ref, report: validation });
            continue;
        }
        match graph.upsert_node(NodeKind::Repository, &repo.ehri_id, repository_properties(repo)) {
            Ok(Upsert::Created) => report.created += 1,
            Ok(Upsert::Updated) => report.updated += 1,
            Ok(Upsert::Unchanged) => report.unchanged += 1,
            Err(e) => {
                report.rejected.push(rejection(&source_ref, &repo.ehri_id, e.code(), "ehriId", e.to_string()));
                continue;
            }
        }
        report.imported.push(repo.ehri_id.clone());
    }
    report
}
