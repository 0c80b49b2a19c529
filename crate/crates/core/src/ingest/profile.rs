//! Declarative mapping profiles (TOML).
//!
//! ```toml
//! profile_id = "bt-files"
//! source_kind = "delimited-table"
//! delimiter = ";"
//!
//! [id]
//! sources = ["signature"]
//!
//! [level]
//! rule = "constant"
//! level = "file"
//!
//! [[fields]]
//! source = "name"
//! target = "title"
//! transform = "copy"
//! required = true
//!
//! [[fields]]
//! source = "date"
//! target = "datesOfCreation"
//! transform = { date-parse = "%d.%m.%Y" }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::archival::{Certainty, DateSpan, Level, PartialDate, Precision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    NestedXml,
    DelimitedTable,
}

/// Canonical unit fields a rule may write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Target {
    Title,
    DatesOfCreation,
    LanguageOfMaterial,
    LanguageOfDescription,
    ScopeContent,
    Extent,
    Keywords,
    Places,
    Persons,
    Departments,
    Parent,
    ProvenanceNote,
    SourceSystem,
}

impl Target {
    pub fn is_list(self) -> bool {
        matches!(
            self,
            Target::DatesOfCreation
                | Target::LanguageOfMaterial
                | Target::Keywords
                | Target::Places
                | Target::Persons
                | Target::Departments
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Copy,
    SplitList(String),
    /// chrono-style pattern (`%Y`, `%m`, `%d`); `iso` for canonical spans.
    DateParse(String),
    Constant(String),
    Concat { paths: Vec<String>, separator: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRule {
    #[serde(default)]
    pub source: String,
    pub target: Target,
    #[serde(default = "copy")]
    pub transform: Transform,
    /// Fail with profile-mismatch if no record carries `source`.
    #[serde(default)]
    pub required: bool,
}

fn copy() -> Transform {
    Transform::Copy
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LevelRule {
    /// Parent links from element nesting; level token read from `path`.
    Nesting {
        path: String,
        /// Source token → level, for sources with their own vocabulary.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        map: BTreeMap<String, Level>,
    },
    /// Level token read from a table column.
    Column {
        path: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        map: BTreeMap<String, Level>,
    },
    /// Every record gets the same level.
    Constant { level: Level },
}

impl LevelRule {
    /// Resolves a source level token (mapped tokens first, then level names).
    pub fn resolve(&self, token: Option<&str>) -> Option<Level> {
        match self {
            LevelRule::Constant { level } => Some(*level),
            LevelRule::Nesting { map, .. } | LevelRule::Column { map, .. } => {
                let token = token?.trim();
                map.get(token).copied().or_else(|| token.parse().ok())
            }
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            LevelRule::Constant { .. } => None,
            LevelRule::Nesting { path, .. } | LevelRule::Column { path, .. } => Some(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdRule {
    pub sources: Vec<String>,
    #[serde(default = "dash")]
    pub separator: String,
}

fn dash() -> String {
    "-".into()
}

fn comma() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingProfile {
    pub profile_id: String,
    pub source_kind: SourceKind,
    #[serde(default = "comma")]
    pub delimiter: char,
    /// Default for `sourceSystem` when no rule writes it.
    #[serde(default)]
    pub source_system: String,
    pub id: IdRule,
    pub level: LevelRule,
    #[serde(default)]
    pub fields: Vec<FieldRule>,
}

impl MappingProfile {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let profile: MappingProfile =
            toml::from_str(text).map_err(|e| IngestError::InvalidProfile(e.to_string()))?;
        profile.check()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profiles always serialize")
    }

    pub fn check(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::InvalidProfile(m));
        if self.profile_id.trim().is_empty() {
            return bad("profile_id is empty".into());
        }
        if self.id.sources.is_empty() || self.id.sources.iter().any(|s| s.trim().is_empty()) {
            return bad("id rule needs at least one non-empty source".into());
        }
        match (&self.level, self.source_kind) {
            (LevelRule::Nesting { .. }, SourceKind::DelimitedTable) => {
                return bad("nesting level rule needs a nested-xml source".into())
            }
            (LevelRule::Column { .. }, SourceKind::NestedXml) => {
                return bad("column level rule needs a delimited-table source".into())
            }
            _ => {}
        }
        let mut seen: BTreeMap<Target, usize> = BTreeMap::new();
        for rule in &self.fields {
            *seen.entry(rule.target).or_default() += 1;
            if rule.source.trim().is_empty() && !matches!(rule.transform, Transform::Constant(_) | Transform::Concat { .. }) {
                return bad(format!("rule for {:?} has no source", rule.target));
            }
        }
        if let Some((t, _)) = seen.iter().find(|(t, n)| **n > 1 && !t.is_list()) {
            return bad(format!("more than one rule targets single-valued field {t:?}"));
        }
        Ok(())
    }

    /// Source paths that must appear in at least one record.
    pub fn required_paths(&self) -> Vec<&str> {
        let mut paths: Vec<&str> = self.id.sources.iter().map(String::as_str).collect();
        paths.extend(self.fields.iter().filter(|r| r.required).map(|r| r.source.as_str()));
        paths
    }

    /// The profile matching [`super::nested::serialize_exchange`] output.
    pub fn canonical_exchange() -> Self {
        let rule = |source: &str, target, transform| FieldRule { source: source.into(), target, transform, required: false };
        MappingProfile {
            profile_id: "exchange".into(),
            source_kind: SourceKind::NestedXml,
            delimiter: ',',
            source_system: String::new(),
            id: IdRule { sources: vec!["@id".into()], separator: dash() },
            level: LevelRule::Nesting { path: "@level".into(), map: BTreeMap::new() },
            fields: vec![
                rule("title", Target::Title, Transform::Copy),
                rule("date", Target::DatesOfCreation, Transform::DateParse("iso".into())),
                rule("language", Target::LanguageOfMaterial, Transform::Copy),
                rule("descriptionLanguage", Target::LanguageOfDescription, Transform::Copy),
                rule("scope", Target::ScopeContent, Transform::Copy),
                rule("extent", Target::Extent, Transform::Copy),
                rule("keyword", Target::Keywords, Transform::Copy),
                rule("place", Target::Places, Transform::Copy),
                rule("person", Target::Persons, Transform::Copy),
                rule("department", Target::Departments, Transform::Copy),
                rule("note", Target::ProvenanceNote, Transform::Copy),
                rule("source", Target::SourceSystem, Transform::Copy),
            ],
        }
    }
}

/// Tokens that mark a unit as explicitly undated.
pub fn is_undated_marker(raw: &str) -> bool {
    matches!(
        raw.trim().to_lowercase().as_str(),
        "undated" | "n.d." | "s.d." | "o.d." | "bez data" | "ohne datum"
    )
}

/// Parses a date or date range using a profile pattern.
///
/// Approximate markers (`ca.`, `circa`, trailing `~` or `?`) set the
/// certainty. Ranges use `/`, or an en dash when the pattern itself
/// contains `/`. Falls back to the canonical form when the pattern fails.
pub fn parse_date(raw: &str, pattern: &str) -> Option<DateSpan> {
    let mut text = raw.trim().to_string();
    let mut certainty = Certainty::Exact;
    for prefix in ["circa ", "ca. ", "ca.", "ca "] {
        if let Some(rest) = text.strip_prefix(prefix) {
            text = rest.trim().to_string();
            certainty = Certainty::Approximate;
            break;
        }
    }
    for suffix in ['~', '?'] {
        if let Some(rest) = text.strip_suffix(suffix) {
            text = rest.trim().to_string();
            certainty = Certainty::Approximate;
        }
    }
    if pattern != "iso" {
        let sep = if pattern.contains('/') { '–' } else { '/' };
        let parsed = match text.split_once(sep) {
            Some((a, b)) => {
                parse_partial(a.trim(), pattern).zip(parse_partial(b.trim(), pattern)).map(|(s, e)| DateSpan::between(s, e))
            }
            None => parse_partial(&text, pattern).map(DateSpan::at),
        };
        if let Some(mut span) = parsed.filter(|s| s.check().is_ok()) {
            span.certainty = certainty;
            return Some(span);
        }
    }
    let mut span: DateSpan = text.parse().ok()?;
    if certainty == Certainty::Approximate {
        span.certainty = certainty;
    }
    Some(span)
}

fn parse_partial(text: &str, pattern: &str) -> Option<PartialDate> {
    let has_day = pattern.contains("%d") || pattern.contains("%e");
    let has_month = pattern.contains("%m") || pattern.contains("%b") || pattern.contains("%B");
    let (date, precision) = if has_day {
        (NaiveDate::parse_from_str(text, pattern).ok()?, Precision::Day)
    } else if has_month {
        (NaiveDate::parse_from_str(&format!("{text}|1"), &format!("{pattern}|%d")).ok()?, Precision::Month)
    } else {
        (NaiveDate::parse_from_str(&format!("{text}|1|1"), &format!("{pattern}|%m|%d")).ok()?, Precision::Year)
    };
    Some(PartialDate::from_naive(date, precision))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = r#"
profile_id = "tm-items"
source_kind = "delimited-table"
delimiter = ";"
[id]
sources = ["inv"]
[level]
rule = "constant"
level = "item"
[[fields]]
source = "nazev"
target = "title"
required = true
[[fields]]
source = "datum"
target = "datesOfCreation"
transform = { date-parse = "%d.%m.%Y" }
[[fields]]
source = "klic"
target = "keywords"
transform = { split-list = "|" }
[[fields]]
target = "languageOfDescription"
transform = { constant = "cs" }
"#;

    #[test]
    fn parses_table_profile() {
        let p = MappingProfile::parse(TABLE).unwrap();
        assert_eq!(p.delimiter, ';');
        assert_eq!(p.level, LevelRule::Constant { level: Level::Item });
        assert_eq!(p.fields[2].transform, Transform::SplitList("|".into()));
        assert_eq!(p.required_paths(), vec!["inv", "nazev"]);
        assert_eq!(MappingProfile::parse(&p.to_toml()).unwrap(), p);
    }

    #[test]
    fn rejects_bad_profiles() {
        let unknown_target = TABLE.replace("target = \"title\"", "target = \"shelfmark\"");
        assert!(matches!(MappingProfile::parse(&unknown_target), Err(IngestError::InvalidProfile(_))));
        let twice = format!("{TABLE}\n[[fields]]\nsource = \"x\"\ntarget = \"title\"\n");
        assert!(matches!(MappingProfile::parse(&twice), Err(IngestError::InvalidProfile(_))));
        let nesting = TABLE.replace("rule = \"constant\"\nlevel = \"item\"", "rule = \"nesting\"\npath = \"@level\"");
        assert!(matches!(MappingProfile::parse(&nesting), Err(IngestError::InvalidProfile(_))));
        let mapped = TABLE.replace(
            "rule = \"constant\"\nlevel = \"item\"",
            "rule = \"column\"\npath = \"typ\"\nmap = { spis = \"file\" }",
        );
        let p = MappingProfile::parse(&mapped).unwrap();
        assert_eq!(p.level.resolve(Some("spis")), Some(Level::File));
        assert_eq!(p.level.resolve(Some("Item")), Some(Level::Item));
        assert_eq!(p.level.resolve(Some("krabice")), None);
        let bad_level = TABLE.replace("level = \"item\"", "level = \"box\"");
        assert!(MappingProfile::parse(&bad_level).is_err());
    }

    #[test]
    fn date_patterns() {
        assert_eq!(parse_date("1.5.1944", "%d.%m.%Y").unwrap().to_string(), "1944-05-01");
        assert_eq!(parse_date("05/1944", "%m/%Y").unwrap().to_string(), "1944-05");
        assert_eq!(parse_date("1942/1945", "%Y").unwrap().to_string(), "1942/1945");
        assert_eq!(parse_date("ca. 1943", "%Y").unwrap().to_string(), "1943~");
        assert_eq!(parse_date("1944-05-01", "%d.%m.%Y").unwrap().to_string(), "1944-05-01");
        assert_eq!(parse_date("01/1944–03/1944", "%m/%Y").unwrap().to_string(), "1944-01/1944-03");
        assert!(parse_date("Frühjahr 1944", "%Y").is_none());
        assert!(parse_date("31.2.1944", "%d.%m.%Y").is_none());
        assert!(is_undated_marker(" N.D. "));
    }
}
