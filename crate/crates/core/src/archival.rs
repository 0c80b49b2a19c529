//! Canonical archival description types and their validators.
//!
//! Units follow a multi-level description model (fonds down to item),
//! repositories an institution-record model. Validators never throw: every
//! problem found is reported as an [`Issue`] in a [`ValidationReport`].

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::registry::{EdgeLabel, Graph, RegistryError};

/// Default character budget for a country report (roughly two pages).
pub const DEFAULT_REPORT_BUDGET: usize = 8_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fonds,
    Subfonds,
    Series,
    Subseries,
    File,
    Item,
    Collection,
    Subcollection,
    Otherlevel,
}

impl Level {
    pub const ALL: [Level; 9] = [
        Level::Fonds,
        Level::Subfonds,
        Level::Series,
        Level::Subseries,
        Level::File,
        Level::Item,
        Level::Collection,
        Level::Subcollection,
        Level::Otherlevel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Fonds => "fonds",
            Level::Subfonds => "subfonds",
            Level::Series => "series",
            Level::Subseries => "subseries",
            Level::File => "file",
            Level::Item => "item",
            Level::Collection => "collection",
            Level::Subcollection => "subcollection",
            Level::Otherlevel => "otherlevel",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown level `{0}`")]
pub struct UnknownLevel(pub String);

impl FromStr for Level {
    type Err = UnknownLevel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = s.trim().to_ascii_lowercase();
        Level::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == token)
            .ok_or_else(|| UnknownLevel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Precision {
    Year,
    Month,
    Day,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DateError {
    #[error("unparseable date `{0}`")]
    Unparseable(String),
    #[error("date `{0}` does not exist in the calendar")]
    OutOfCalendar(String),
    #[error("span starts after it ends: `{0}`")]
    Reversed(String),
}

/// A calendar date known to year, month or day precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartialDate {
    pub year: i32,
    pub month: Option<u32>,
    pub day: Option<u32>,
}

impl PartialDate {
    pub fn year(year: i32) -> Self {
        Self { year, month: None, day: None }
    }

    pub fn month(year: i32, month: u32) -> Self {
        Self { year, month: Some(month), day: None }
    }

    pub fn day(year: i32, month: u32, day: u32) -> Self {
        Self { year, month: Some(month), day: Some(day) }
    }

    pub fn precision(&self) -> Precision {
        match (self.month, self.day) {
            (None, _) => Precision::Year,
            (Some(_), None) => Precision::Month,
            (Some(_), Some(_)) => Precision::Day,
        }
    }

    /// First calendar day covered by this date.
    pub fn earliest(&self) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(self.year, self.month.unwrap_or(1), self.day.unwrap_or(1))
    }

    /// Last calendar day covered by this date.
    pub fn latest(&self) -> Option<NaiveDate> {
        match (self.month, self.day) {
            (None, _) => NaiveDate::from_ymd_opt(self.year, 12, 31),
            (Some(m), None) => {
                let first_next = if m == 12 {
                    NaiveDate::from_ymd_opt(self.year + 1, 1, 1)
                } else {
                    NaiveDate::from_ymd_opt(self.year, m + 1, 1)
                };
                first_next.and_then(|d| d.pred_opt())
            }
            (Some(m), Some(d)) => NaiveDate::from_ymd_opt(self.year, m, d),
        }
    }

    pub fn is_valid(&self) -> bool {
        if self.day.is_some() && self.month.is_none() {
            return false;
        }
        self.earliest().is_some() && self.latest().is_some()
    }

    pub fn from_naive(date: NaiveDate, precision: Precision) -> Self {
        match precision {
            Precision::Year => Self::year(date.year()),
            Precision::Month => Self::month(date.year(), date.month()),
            Precision::Day => Self::day(date.year(), date.month(), date.day()),
        }
    }
}

impl fmt::Display for PartialDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
            if let Some(d) = self.day {
                write!(f, "-{d:02}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for PartialDate {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.trim();
        let bad = || DateError::Unparseable(s.to_string());
        let parts: Vec<&str> = raw.split('-').collect();
        let num = |p: &str, len: usize| -> Result<u32, DateError> {
            if p.len() != len || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            p.parse().map_err(|_| bad())
        };
        let date = match parts.as_slice() {
            [y] => PartialDate::year(num(y, 4)? as i32),
            [y, m] => PartialDate::month(num(y, 4)? as i32, num(m, 2)?),
            [y, m, d] => PartialDate::day(num(y, 4)? as i32, num(m, 2)?, num(d, 2)?),
            _ => return Err(bad()),
        };
        if !date.is_valid() {
            return Err(DateError::OutOfCalendar(s.to_string()));
        }
        Ok(date)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certainty {
    #[default]
    Exact,
    Approximate,
}

/// A creation date or date range. Canonical text form is
/// `start[/end][~]`, the trailing `~` marking an approximate span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DateSpan {
    pub start: PartialDate,
    pub end: Option<PartialDate>,
    pub certainty: Certainty,
}

impl DateSpan {
    pub fn at(start: PartialDate) -> Self {
        Self { start, end: None, certainty: Certainty::Exact }
    }

    pub fn between(start: PartialDate, end: PartialDate) -> Self {
        Self { start, end: Some(end), certainty: Certainty::Exact }
    }

    pub fn earliest(&self) -> NaiveDate {
        self.start.earliest().unwrap_or(NaiveDate::MIN)
    }

    pub fn latest(&self) -> NaiveDate {
        self.end.unwrap_or(self.start).latest().unwrap_or(NaiveDate::MAX)
    }

    pub fn check(&self) -> Result<(), DateError> {
        if !self.start.is_valid() || self.end.is_some_and(|e| !e.is_valid()) {
            return Err(DateError::OutOfCalendar(self.to_string()));
        }
        if let Some(end) = self.end {
            if self.start.earliest() > end.latest() {
                return Err(DateError::Reversed(self.to_string()));
            }
        }
        Ok(())
    }

    /// Closed-interval overlap on the calendar days each span covers.
    pub fn overlaps(&self, other: &DateSpan) -> bool {
        self.earliest() <= other.latest() && other.earliest() <= self.latest()
    }
}

impl fmt::Display for DateSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        if let Some(end) = self.end {
            write!(f, "/{end}")?;
        }
        if self.certainty == Certainty::Approximate {
            f.write_str("~")?;
        }
        Ok(())
    }
}

impl FromStr for DateSpan {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.trim();
        let (body, certainty) = match raw.strip_suffix('~') {
            Some(b) => (b, Certainty::Approximate),
            None => (raw, Certainty::Exact),
        };
        let (start, end) = match body.split_once('/') {
            Some((a, b)) => (a.parse()?, Some(b.parse()?)),
            None => (body.parse()?, None),
        };
        let span = DateSpan { start, end, certainty };
        span.check()?;
        Ok(span)
    }
}

impl Serialize for DateSpan {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DateSpan {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One node of a hierarchical archival description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DocumentaryUnit {
    pub global_id: String,
    pub local_id: String,
    pub level: Level,
    pub title: String,
    #[serde(default)]
    pub dates_of_creation: Vec<DateSpan>,
    /// Set when the unit is explicitly described as undated.
    #[serde(default)]
    pub undated: bool,
    #[serde(default)]
    pub language_of_material: Vec<String>,
    #[serde(default)]
    pub language_of_description: String,
    #[serde(default)]
    pub scope_content: String,
    #[serde(default)]
    pub extent: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub places: Vec<String>,
    #[serde(default)]
    pub persons: Vec<String>,
    #[serde(default)]
    pub departments: Vec<String>,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub provenance_note: String,
    #[serde(default)]
    pub source_system: String,
}

impl DocumentaryUnit {
    pub fn new(local_id: impl Into<String>, level: Level, title: impl Into<String>) -> Self {
        let local_id = local_id.into();
        Self {
            global_id: String::new(),
            local_id,
            level,
            title: title.into(),
            dates_of_creation: Vec::new(),
            undated: false,
            language_of_material: Vec::new(),
            language_of_description: String::new(),
            scope_content: String::new(),
            extent: String::new(),
            keywords: Vec::new(),
            places: Vec::new(),
            persons: Vec::new(),
            departments: Vec::new(),
            parent: None,
            provenance_note: String::new(),
            source_system: String::new(),
        }
    }

    /// Repository code prefix of the global id.
    pub fn repository_code(&self) -> Option<&str> {
        repository_of(&self.global_id)
    }
}

/// Builds `repositoryCode/localId`.
pub fn global_id(repository_code: &str, local_id: &str) -> String {
    format!("{repository_code}/{local_id}")
}

pub fn repository_of(global_id: &str) -> Option<&str> {
    global_id.split_once('/').map(|(repo, _)| repo).filter(|r| !r.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptionStatus {
    #[default]
    Draft,
    Published,
}

impl DescriptionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DescriptionStatus::Draft => "draft",
            DescriptionStatus::Published => "published",
        }
    }
}

/// A collection-holding institution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Repository {
    pub ehri_id: String,
    pub authorized_form_of_name: String,
    #[serde(default)]
    pub other_names: Vec<String>,
    pub country: String,
    #[serde(default)]
    pub address: String,
    #[serde(default)]
    pub contact: String,
    #[serde(default)]
    pub description_status: DescriptionStatus,
    #[serde(default)]
    pub holdings_summary: String,
    #[serde(default)]
    pub harvest_endpoint: Option<String>,
    #[serde(default)]
    pub harvest_capable: bool,
}

/// Structured national overview. Sections are blank-line separated paragraphs;
/// the length budget counts paragraph characters, not separators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CountryReport {
    pub country: String,
    #[serde(default)]
    pub section_history: Option<String>,
    #[serde(default)]
    pub section_archives: Option<String>,
    #[serde(default)]
    pub section_ehri_research: Option<String>,
    #[serde(default = "default_budget")]
    pub max_length: usize,
}

fn default_budget() -> usize {
    DEFAULT_REPORT_BUDGET
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub subject_id: String,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn new(subject_id: impl Into<String>) -> Self {
        Self { subject_id: subject_id.into(), issues: Vec::new() }
    }

    pub fn error(&mut self, code: &str, path: &str, message: impl Into<String>) {
        self.push(Severity::Error, code, path, message);
    }

    pub fn warning(&mut self, code: &str, path: &str, message: impl Into<String>) {
        self.push(Severity::Warning, code, path, message);
    }

    fn push(&mut self, severity: Severity, code: &str, path: &str, message: impl Into<String>) {
        self.issues.push(Issue {
            severity,
            code: code.to_string(),
            message: message.into(),
            path: path.to_string(),
        });
    }

    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn codes(&self) -> Vec<&str> {
        self.issues.iter().map(|i| i.code.as_str()).collect()
    }
}

fn is_iso639_1(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_lowercase())
}

fn is_iso3166_alpha2(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_uppercase())
}

pub(crate) fn is_clean_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c == '\t' || c == '\n' || c == '\r')
}

pub fn validate_unit(unit: &DocumentaryUnit) -> ValidationReport {
    let mut report = ValidationReport::new(unit.global_id.clone());

    let id_ok = is_clean_id(&unit.global_id)
        && unit
            .global_id
            .split_once('/')
            .is_some_and(|(repo, rest)| !repo.is_empty() && !rest.is_empty());
    if !id_ok {
        report.error(
            "invalid-global-id",
            "globalId",
            format!("`{}` is not of the form repositoryCode/localPath", unit.global_id),
        );
    }
    if unit.local_id.trim().is_empty() {
        report.error("missing-local-id", "localId", "local identifier is empty");
    }
    if unit.title.trim().is_empty() {
        report.error("missing-title", "title", "title is required");
    }
    if unit.dates_of_creation.is_empty() && !unit.undated {
        report.error("missing-date", "datesOfCreation", "at least one date or an explicit undated marker is required");
    }
    for (i, span) in unit.dates_of_creation.iter().enumerate() {
        if let Err(e) = span.check() {
            report.error("invalid-date", &format!("datesOfCreation[{i}]"), e.to_string());
        }
    }
    for (i, lang) in unit.language_of_material.iter().enumerate() {
        if !is_iso639_1(lang) {
            report.error("invalid-language", &format!("languageOfMaterial[{i}]"), format!("`{lang}` is not an ISO 639-1 code"));
        }
    }
    if !unit.language_of_description.is_empty() && !is_iso639_1(&unit.language_of_description) {
        report.error(
            "invalid-language",
            "languageOfDescription",
            format!("`{}` is not an ISO 639-1 code", unit.language_of_description),
        );
    }
    if let Some(parent) = &unit.parent {
        if parent == &unit.global_id {
            report.error("self-parent", "parent", "unit names itself as parent");
        } else if repository_of(parent) != repository_of(&unit.global_id) {
            report.error("parent-outside-repository", "parent", format!("parent `{parent}` belongs to another repository"));
        }
    }
    report
}

pub fn validate_repository(repo: &Repository) -> ValidationReport {
    let mut report = ValidationReport::new(repo.ehri_id.clone());
    if !is_clean_id(&repo.ehri_id) || repo.ehri_id.contains('/') || repo.ehri_id.contains(char::is_whitespace) {
        report.error("invalid-id", "ehriId", format!("`{}` is not a usable identifier", repo.ehri_id));
    }
    if repo.authorized_form_of_name.trim().is_empty() {
        report.error("missing-name", "authorizedFormOfName", "authorized form of name is required");
    }
    if repo.country.is_empty() {
        report.error("missing-country", "country", "country is required");
    } else if !is_iso3166_alpha2(&repo.country) {
        report.error("invalid-country", "country", format!("`{}` is not an ISO 3166-1 alpha-2 code", repo.country));
    }
    if repo.contact.trim().is_empty() && repo.address.trim().is_empty() {
        report.error("missing-contact", "contact", "contact details or an address are required");
    }
    match (&repo.harvest_endpoint, repo.harvest_capable) {
        (None, true) => report.error("endpoint-missing", "harvestEndpoint", "harvest-capable repository has no endpoint"),
        (Some(_), false) => report.error("endpoint-unexpected", "harvestEndpoint", "endpoint given but repository is not harvest-capable"),
        (Some(url), true) if !(url.starts_with("http://") || url.starts_with("https://")) => {
            report.error("invalid-endpoint", "harvestEndpoint", format!("`{url}` is not an http(s) URL"))
        }
        _ => {}
    }
    report
}

/// Splits a section into paragraphs: blocks separated by one or more blank lines.
pub fn paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line.trim_end());
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n"));
    }
    out
}

pub fn validate_country_report(report: &CountryReport) -> ValidationReport {
    let mut out = ValidationReport::new(report.country.clone());
    if !is_iso3166_alpha2(&report.country) {
        out.error("invalid-country", "country", format!("`{}` is not an ISO 3166-1 alpha-2 code", report.country));
    }
    let sections: [(&str, &Option<String>, usize, bool); 3] = [
        ("history", &report.section_history, 2, true),
        ("archives", &report.section_archives, 2, true),
        ("ehri-research", &report.section_ehri_research, 1, false),
    ];
    let mut total = 0usize;
    for (name, text, expected, exact) in sections {
        let Some(text) = text.as_deref().filter(|t| !t.trim().is_empty()) else {
            out.error(&format!("missing-section:{name}"), name, format!("section `{name}` is missing"));
            continue;
        };
        let paras = paragraphs(text);
        total += paras.iter().map(|p| p.chars().count()).sum::<usize>();
        let count = paras.len();
        let ok = if exact { count == expected } else { count >= expected };
        if !ok {
            let want = if exact { format!("exactly {expected}") } else { format!("at least {expected}") };
            out.error(
                &format!("paragraph-count:{name}"),
                name,
                format!("section `{name}` has {count} paragraphs, expected {want}"),
            );
        }
    }
    if total > report.max_length {
        out.error("over-budget", "", format!("report is {total} characters, budget is {}", report.max_length));
    }
    out
}

/// Number of `partOf` hops from a unit to the root of its tree.
pub fn unit_depth(unit_id: &str, graph: &Graph) -> Result<usize, RegistryError> {
    if graph.node(unit_id).is_none() {
        return Err(RegistryError::UnknownNode(unit_id.to_string()));
    }
    let mut depth = 0;
    let mut current = unit_id.to_string();
    while let Some(parent) = graph.parent(&current, EdgeLabel::PartOf) {
        depth += 1;
        current = parent.to_string();
    }
    Ok(depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bulletin() -> DocumentaryUnit {
        let mut unit = DocumentaryUnit::new("terezin/1", Level::File, "Tagesbefehl");
        unit.global_id = "jmp/terezin/1".into();
        unit.dates_of_creation = vec!["1944-05-01".parse().unwrap()];
        unit
    }

    #[test]
    fn daily_bulletin_is_valid() {
        let report = validate_unit(&bulletin());
        assert!(report.is_valid(), "{:?}", report.issues);
    }

    #[test]
    fn empty_title_is_single_error() {
        let mut unit = bulletin();
        unit.title = "  ".into();
        let report = validate_unit(&unit);
        assert_eq!(report.codes(), vec!["missing-title"]);
    }

    #[test]
    fn self_parent() {
        let mut unit = bulletin();
        unit.parent = Some(unit.global_id.clone());
        assert_eq!(validate_unit(&unit).codes(), vec!["self-parent"]);
    }

    #[test]
    fn undated_marker_satisfies_date_minimum() {
        let mut unit = bulletin();
        unit.dates_of_creation.clear();
        assert_eq!(validate_unit(&unit).codes(), vec!["missing-date"]);
        unit.undated = true;
        assert!(validate_unit(&unit).is_valid());
    }

    #[test]
    fn validation_is_pure() {
        let mut unit = bulletin();
        unit.language_of_material = vec!["German".into()];
        let before = unit.clone();
        assert_eq!(validate_unit(&unit), validate_unit(&unit));
        assert_eq!(unit, before);
    }

    #[test]
    fn unknown_level_rejected() {
        assert!("fonds".parse::<Level>().is_ok());
        assert!("SubCollection".parse::<Level>().is_ok());
        assert_eq!("box".parse::<Level>(), Err(UnknownLevel("box".into())));
    }

    fn yad_vashem() -> Repository {
        Repository {
            ehri_id: "2798".into(),
            authorized_form_of_name: "Yad Vashem".into(),
            other_names: vec![],
            country: "IL".into(),
            address: "Har Hazikaron, Jerusalem".into(),
            contact: String::new(),
            description_status: DescriptionStatus::Published,
            holdings_summary: String::new(),
            harvest_endpoint: None,
            harvest_capable: false,
        }
    }

    #[test]
    fn yad_vashem_record_is_valid() {
        let report = validate_repository(&yad_vashem());
        assert!(report.is_valid(), "{:?}", report.issues);
    }

    #[test]
    fn harvest_capable_without_endpoint() {
        let mut repo = yad_vashem();
        repo.harvest_capable = true;
        assert_eq!(validate_repository(&repo).codes(), vec!["endpoint-missing"]);
        repo.harvest_endpoint = Some("https://example.org/oai".into());
        assert!(validate_repository(&repo).is_valid());
        repo.harvest_capable = false;
        assert_eq!(validate_repository(&repo).codes(), vec!["endpoint-unexpected"]);
    }

    #[test]
    fn date_span_forms() {
        let span: DateSpan = "1944".parse().unwrap();
        assert_eq!(span.start.precision(), Precision::Year);
        assert_eq!(span.to_string(), "1944");
        let span: DateSpan = "1943-12/1944-06~".parse().unwrap();
        assert_eq!(span.certainty, Certainty::Approximate);
        assert_eq!(span.to_string(), "1943-12/1944-06~");
        assert_eq!(span.latest(), NaiveDate::from_ymd_opt(1944, 6, 30).unwrap());
        assert!(matches!("1944-02-30".parse::<DateSpan>(), Err(DateError::OutOfCalendar(_))));
        assert!(matches!("1945/1944".parse::<DateSpan>(), Err(DateError::Reversed(_))));
        assert!("1944-5-1".parse::<DateSpan>().is_err());
        // year precision end covers the whole year
        assert!("1944-05/1944".parse::<DateSpan>().is_ok());
    }

    #[test]
    fn span_overlap() {
        let may: DateSpan = "1945-05".parse().unwrap();
        let day: DateSpan = "1945-05-08".parse().unwrap();
        let year: DateSpan = "1944".parse().unwrap();
        assert!(may.overlaps(&day));
        assert!(!may.overlaps(&year));
    }

    fn report_text(paras: usize, each: usize) -> String {
        (0..paras).map(|_| "x".repeat(each)).collect::<Vec<_>>().join("\n\n")
    }

    fn country_report(total: usize) -> CountryReport {
        // five paragraphs of equal size summing to `total` characters
        let each = total / 5;
        CountryReport {
            country: "CZ".into(),
            section_history: Some(report_text(2, each)),
            section_archives: Some(report_text(2, each)),
            section_ehri_research: Some(report_text(1, total - 4 * each)),
            max_length: DEFAULT_REPORT_BUDGET,
        }
    }

    #[test]
    fn well_formed_report_valid() {
        let report = country_report(6_000);
        assert!(validate_country_report(&report).is_valid());
    }

    #[test]
    fn missing_archives_section() {
        let mut report = country_report(6_000);
        report.section_archives = None;
        assert_eq!(validate_country_report(&report).codes(), vec!["missing-section:archives"]);
    }

    #[test]
    fn budget_boundary() {
        let mut report = country_report(6_000);
        report.max_length = 6_000;
        assert!(validate_country_report(&report).is_valid());
        report.max_length = 5_999;
        assert_eq!(validate_country_report(&report).codes(), vec!["over-budget"]);
    }

    #[test]
    fn paragraph_counting() {
        assert_eq!(paragraphs("a\nb\n\n\n c \n\n"), vec!["a\nb".to_string(), " c".to_string()]);
        let mut report = country_report(2_000);
        report.section_history = Some("one paragraph only".into());
        assert_eq!(validate_country_report(&report).codes(), vec!["paragraph-count:history"]);
    }
}
