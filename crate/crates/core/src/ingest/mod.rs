//! Bringing partner exports into the canonical model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::archival::{DocumentaryUnit, Level, ValidationReport};
use crate::registry::RegistryError;

pub mod harvest;
mod import;
pub mod nested;
pub mod profile;
pub mod table;

pub use import::{batch_checksum, import_batch, import_parsed, import_repositories, ImportReport, References, CHI_SOURCE};
pub use profile::{MappingProfile, SourceKind};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("invalid mapping profile: {0}")]
    InvalidProfile(String),
    #[error("malformed input at byte {position}: {reason}")]
    MalformedInput { position: u64, reason: String },
    #[error("required source path `{0}` is absent from every record")]
    ProfileMismatch(String),
    #[error("{source_ref}: no level for token `{token}`")]
    InvalidLevel { source_ref: String, token: String },
    #[error("row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("protocol error on page {page}: {reason}")]
    ProtocolError { page: usize, reason: String },
    #[error("bad resumption token `{0}`")]
    BadResumptionToken(String),
    #[error("unknown repository `{0}`")]
    UnknownRepository(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::InvalidProfile(_) => "invalid-profile",
            IngestError::MalformedInput { .. } => "malformed-input",
            IngestError::ProfileMismatch(_) => "profile-mismatch",
            IngestError::InvalidLevel { .. } => "invalid-level",
            IngestError::MalformedRow { .. } => "malformed-row",
            IngestError::NetworkFailure(_) => "network-failure",
            IngestError::ProtocolError { .. } => "protocol-error",
            IngestError::BadResumptionToken(_) => "bad-resumption-token",
            IngestError::UnknownRepository(_) => "unknown-repository",
            IngestError::Io(_) => "io-failure",
            IngestError::Registry(e) => e.code(),
        }
    }
}

/// A parsed unit and its children.
///
/// `unit.globalId` is left empty and `unit.parent` holds the parent's
/// *local* id; [`import_batch`] qualifies both with the repository code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnitTree {
    pub source_ref: String,
    pub unit: DocumentaryUnit,
    #[serde(default)]
    pub children: Vec<UnitTree>,
}

impl UnitTree {
    pub fn leaf(source_ref: impl Into<String>, unit: DocumentaryUnit) -> Self {
        Self { source_ref: source_ref.into(), unit, children: Vec::new() }
    }

    /// Number of units in the tree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(UnitTree::size).sum::<usize>()
    }

    /// Levels on the longest root-to-leaf path (a lone unit has depth 1).
    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(UnitTree::depth).max().unwrap_or(0)
    }

    /// Units in pre-order.
    pub fn units(&self) -> Vec<&DocumentaryUnit> {
        let mut out = vec![&self.unit];
        for child in &self.children {
            out.extend(child.units());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Warning {
    pub source_ref: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Rejection {
    pub source_ref: String,
    pub report: ValidationReport,
}

/// Output of a parser: trees, records quarantined at parse time, warnings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParsedBatch {
    pub trees: Vec<UnitTree>,
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<Warning>,
}

impl ParsedBatch {
    /// Input records seen, accepted or not.
    pub fn record_count(&self) -> usize {
        self.trees.iter().map(UnitTree::size).sum::<usize>() + self.rejected.len()
    }
}

/// Parses input according to the profile's source kind.
pub fn parse(bytes: &[u8], profile: &MappingProfile) -> Result<ParsedBatch, IngestError> {
    match profile.source_kind {
        SourceKind::NestedXml => nested::parse_nested(bytes, profile),
        SourceKind::DelimitedTable => table::parse_table(bytes, profile),
    }
}

/// Source values by path (`@attr`, `element`, `element/child`).
pub(crate) type Record = BTreeMap<String, Vec<String>>;

pub(crate) fn first<'a>(record: &'a Record, path: &str) -> Option<&'a str> {
    record.get(path)?.iter().map(|v| v.trim()).find(|v| !v.is_empty())
}

pub(crate) fn check_required(records: &[&Record], profile: &MappingProfile) -> Result<(), IngestError> {
    if records.is_empty() {
        return Ok(());
    }
    for path in profile.required_paths() {
        if !records.iter().any(|r| first(r, path).is_some()) {
            return Err(IngestError::ProfileMismatch(path.to_string()));
        }
    }
    Ok(())
}

/// Applies the id rule, or names the first empty id source.
pub(crate) fn local_id(record: &Record, profile: &MappingProfile) -> Result<String, String> {
    let mut parts = Vec::new();
    for source in &profile.id.sources {
        match first(record, source) {
            Some(v) => parts.push(v),
            None => return Err(source.clone()),
        }
    }
    Ok(parts.join(&profile.id.separator))
}

pub(crate) fn missing_id(source_ref: &str, path: &str) -> Rejection {
    let mut report = ValidationReport::new(source_ref);
    report.error("missing-id", path, format!("id source `{path}` is empty"));
    Rejection { source_ref: source_ref.to_string(), report }
}

/// Builds a unit from a record with every field rule applied.
pub(crate) fn map_record(
    record: &Record,
    local_id: String,
    level: Level,
    profile: &MappingProfile,
    source_ref: &str,
    warnings: &mut Vec<Warning>,
) -> DocumentaryUnit {
    use profile::{is_undated_marker, parse_date, Target, Transform};

    let mut unit = DocumentaryUnit::new(local_id, level, "");
    let mut unparsed = Vec::new();
    for rule in &profile.fields {
        let raw: Vec<String> = match &rule.transform {
            Transform::Copy | Transform::DateParse(_) => record
                .get(&rule.source)
                .into_iter()
                .flatten()
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect(),
            Transform::SplitList(sep) => record
                .get(&rule.source)
                .into_iter()
                .flatten()
                .flat_map(|v| v.split(sep.as_str()).map(|p| p.trim().to_string()).collect::<Vec<_>>())
                .filter(|v| !v.is_empty())
                .collect(),
            Transform::Constant(v) => vec![v.clone()],
            Transform::Concat { paths, separator } => {
                let parts: Vec<&str> = paths.iter().filter_map(|p| first(record, p)).collect();
                if parts.is_empty() {
                    Vec::new()
                } else {
                    vec![parts.join(separator)]
                }
            }
        };
        if rule.target == Target::DatesOfCreation {
            let pattern = match &rule.transform {
                Transform::DateParse(p) => p.as_str(),
                _ => "iso",
            };
            for value in raw {
                if is_undated_marker(&value) {
                    unit.undated = true;
                } else if let Some(span) = parse_date(&value, pattern) {
                    unit.dates_of_creation.push(span);
                } else {
                    warnings.push(Warning {
                        source_ref: source_ref.to_string(),
                        code: "unparsed-date".into(),
                        message: format!("`{value}` does not match `{pattern}`"),
                    });
                    unparsed.push(value);
                }
            }
            continue;
        }
        let list = match rule.target {
            Target::LanguageOfMaterial => Some(&mut unit.language_of_material),
            Target::Keywords => Some(&mut unit.keywords),
            Target::Places => Some(&mut unit.places),
            Target::Persons => Some(&mut unit.persons),
            Target::Departments => Some(&mut unit.departments),
            _ => None,
        };
        if let Some(list) = list {
            for v in raw {
                if !list.contains(&v) {
                    list.push(v);
                }
            }
            continue;
        }
        if raw.is_empty() {
            continue;
        }
        let joined = raw.join(" ");
        match rule.target {
            Target::Title => unit.title = joined,
            Target::LanguageOfDescription => unit.language_of_description = joined,
            Target::ScopeContent => unit.scope_content = raw.join("\n\n"),
            Target::Extent => unit.extent = joined,
            Target::Parent => unit.parent = Some(joined),
            Target::ProvenanceNote => unit.provenance_note = raw.join("\n"),
            Target::SourceSystem => unit.source_system = joined,
            _ => unreachable!("list targets handled above"),
        }
    }
    if !unparsed.is_empty() {
        for value in &unparsed {
            if !unit.provenance_note.is_empty() {
                unit.provenance_note.push('\n');
            }
            unit.provenance_note.push_str(&format!("unparsed date: {value}"));
        }
        if unit.dates_of_creation.is_empty() {
            unit.undated = true;
        }
    }
    if unit.source_system.is_empty() {
        unit.source_system = profile.source_system.clone();
    }
    unit
}
