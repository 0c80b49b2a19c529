//! Client for the harvest protocol subset.
//!
//! `GET endpoint?verb=ListRecords[&from=ISO-8601]` answers with
//!
//! ```xml
//! <OAI-PMH>
//!   <ListRecords>
//!     <record>
//!       <header><identifier>jmp:1</identifier><datestamp>2024-03-01</datestamp></header>
//!       <metadata><unit id="1" level="file">...</unit></metadata>
//!     </record>
//!     <resumptionToken>page-2</resumptionToken>
//!   </ListRecords>
//! </OAI-PMH>
//! ```
//!
//! and later pages are requested with `verb=ListRecords&resumptionToken=…`.
//! `verb=GetRecord&identifier=…` returns a single `<GetRecord><record>`.
//! Failures come back as `<error code="…">`.

use std::thread;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use quick_xml::events::Event;
use quick_xml::Reader;
use reqwest::Url;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub identifier: String,
    pub datestamp: String,
    /// Inner markup of `<metadata>`.
    pub payload: String,
}

/// One HTTP GET: the status and body, or a transport-level failure.
pub trait Transport {
    fn get(&self, url: &str) -> Result<(u16, String), String>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let client = reqwest::blocking::Client::builder().timeout(timeout).build().expect("http client");
        Self { client }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<(u16, String), String> {
        let response = self.client.get(url).send().map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| e.to_string())?;
        Ok((status, body))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestConfig {
    /// Extra attempts after a failed request.
    pub retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff_ms: u64,
    /// Guard against endpoints that never stop issuing tokens.
    pub max_pages: usize,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self { retries: 3, backoff_ms: 500, max_pages: 10_000 }
    }
}

pub struct Harvester<T: Transport = HttpTransport> {
    transport: T,
    config: HarvestConfig,
}

impl Harvester<HttpTransport> {
    pub fn http(config: HarvestConfig) -> Self {
        Self::new(HttpTransport::default(), config)
    }
}

impl<T: Transport> Harvester<T> {
    pub fn new(transport: T, config: HarvestConfig) -> Self {
        Self { transport, config }
    }

    /// All records with datestamp ≥ `from`, following resumption tokens to
    /// the end. Any failure discards the pages already fetched.
    pub fn list_records(&self, endpoint: &str, from: Option<&str>) -> Result<Vec<RawRecord>, IngestError> {
        let from_time = match from {
            Some(f) => Some(parse_timestamp(f).ok_or_else(|| IngestError::InvalidProfile(format!("`{f}` is not an ISO-8601 timestamp")))?),
            None => None,
        };
        let mut records = Vec::new();
        let mut token: Option<String> = None;
        for page in 1..=self.config.max_pages {
            let mut params = vec![("verb", "ListRecords".to_string())];
            match (&token, from) {
                (Some(t), _) => params.push(("resumptionToken", t.clone())),
                (None, Some(f)) => params.push(("from", f.to_string())),
                (None, None) => {}
            }
            let body = self.fetch(endpoint, &params, page)?;
            let parsed = match parse_page(&body, "ListRecords") {
                Ok(p) => p,
                Err(PageError::NoRecords) => Page::default(),
                Err(PageError::BadToken) => return Err(IngestError::BadResumptionToken(token.unwrap_or_default())),
                Err(PageError::Protocol(reason)) => return Err(IngestError::ProtocolError { page, reason }),
            };
            tracing::debug!(endpoint, page, records = parsed.records.len(), "harvested page");
            records.extend(parsed.records);
            match parsed.token {
                Some(t) if !t.is_empty() => token = Some(t),
                _ => {
                    if let Some(min) = from_time {
                        records.retain(|r| parse_timestamp(&r.datestamp).is_some_and(|d| d >= min));
                    }
                    return Ok(records);
                }
            }
        }
        Err(IngestError::ProtocolError { page: self.config.max_pages, reason: "page limit reached".into() })
    }

    pub fn get_record(&self, endpoint: &str, identifier: &str) -> Result<RawRecord, IngestError> {
        let params = [("verb", "GetRecord".to_string()), ("identifier", identifier.to_string())];
        let body = self.fetch(endpoint, &params, 1)?;
        let page = parse_page(&body, "GetRecord").map_err(|e| IngestError::ProtocolError {
            page: 1,
            reason: match e {
                PageError::Protocol(r) => r,
                _ => format!("no record `{identifier}`"),
            },
        })?;
        page.records.into_iter().next().ok_or_else(|| IngestError::ProtocolError { page: 1, reason: "empty GetRecord".into() })
    }

    fn fetch(&self, endpoint: &str, params: &[(&str, String)], page: usize) -> Result<String, IngestError> {
        let url = Url::parse_with_params(endpoint, params)
            .map_err(|e| IngestError::NetworkFailure(format!("bad endpoint `{endpoint}`: {e}")))?;
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16))));
            }
            match self.transport.get(url.as_str()) {
                Ok((200, body)) => return Ok(body),
                Ok((status, _)) if status >= 500 || status == 429 => last = format!("HTTP {status} on page {page}"),
                Ok((status, _)) => {
                    return Err(IngestError::ProtocolError { page, reason: format!("unexpected HTTP status {status}") })
                }
                Err(e) => last = format!("{e} (page {page})"),
            }
            tracing::warn!(%url, attempt, error = %last, "harvest request failed");
        }
        Err(IngestError::NetworkFailure(last))
    }
}

/// Accepts `YYYY-MM-DD` or a full RFC 3339 timestamp.
pub fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    if let Ok(d) = DateTime::parse_from_rfc3339(text) {
        return Some(d.with_timezone(&Utc).naive_utc());
    }
    if let Ok(d) = NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S") {
        return Some(d);
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Wraps record payloads into one exchange document for the nested parser.
pub fn records_to_document(records: &[RawRecord]) -> String {
    let mut out = String::from("<export>\n");
    for r in records {
        out.push_str(&r.payload);
        out.push('\n');
    }
    out.push_str("</export>\n");
    out
}

#[derive(Debug, Default)]
struct Page {
    records: Vec<RawRecord>,
    token: Option<String>,
}

enum PageError {
    Protocol(String),
    BadToken,
    NoRecords,
}

fn parse_page(body: &str, verb: &str) -> Result<Page, PageError> {
    let mut reader = Reader::from_str(body);
    let mut page = Page::default();
    let mut path: Vec<String> = Vec::new();
    let mut text = String::new();
    let mut current: Option<RawRecord> = None;
    let mut metadata_start: Option<usize> = None;
    let mut saw_verb = false;
    let mut error: Option<(String, String)> = None;

    loop {
        let before = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|e| PageError::Protocol(format!("malformed XML at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                if metadata_start.is_none() {
                    match name.as_str() {
                        "record" => current = Some(RawRecord { identifier: String::new(), datestamp: String::new(), payload: String::new() }),
                        "metadata" => metadata_start = Some(reader.buffer_position() as usize),
                        "error" => {
                            let code = e
                                .try_get_attribute("code")
                                .ok()
                                .flatten()
                                .map(|a| String::from_utf8_lossy(&a.value).into_owned())
                                .unwrap_or_default();
                            error = Some((code, String::new()));
                        }
                        n if n == verb => saw_verb = true,
                        _ => {}
                    }
                }
                path.push(name);
                text.clear();
            }
            Event::Empty(e) => {
                let name = e.local_name();
                if metadata_start.is_none() && name.as_ref() == verb.as_bytes() {
                    saw_verb = true;
                }
                if metadata_start.is_none() && name.as_ref() == b"error" {
                    let code = e
                        .try_get_attribute("code")
                        .ok()
                        .flatten()
                        .map(|a| String::from_utf8_lossy(&a.value).into_owned())
                        .unwrap_or_default();
                    error = Some((code, String::new()));
                }
            }
            Event::Text(t) => {
                if metadata_start.is_none() {
                    text.push_str(&t.unescape().map_err(|e| PageError::Protocol(e.to_string()))?);
                }
            }
            Event::End(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                path.pop();
                if let Some(start) = metadata_start {
                    if name == "metadata" && !path.iter().any(|p| p == "metadata") {
                        if let Some(r) = current.as_mut() {
                            r.payload = body[start..before].trim().to_string();
                        }
                        metadata_start = None;
                    }
                    continue;
                }
                let value = text.trim().to_string();
                match name.as_str() {
                    "identifier" if path.last().is_some_and(|p| p == "header") => {
                        if let Some(r) = current.as_mut() {
                            r.identifier = value;
                        }
                    }
                    "datestamp" => {
                        if let Some(r) = current.as_mut() {
                            r.datestamp = value;
                        }
                    }
                    "record" => {
                        let r = current.take().ok_or_else(|| PageError::Protocol("unbalanced record".into()))?;
                        if r.identifier.is_empty() {
                            return Err(PageError::Protocol("record without identifier".into()));
                        }
                        page.records.push(r);
                    }
                    "resumptionToken" => page.token = Some(value),
                    "error" => {
                        if let Some(err) = error.as_mut() {
                            err.1 = value;
                        }
                    }
                    _ => {}
                }
                text.clear();
            }
            Event::Eof => {
                if !path.is_empty() {
                    return Err(PageError::Protocol(format!("document ends inside <{}>", path.join("/"))));
                }
                break;
            }
            _ => {}
        }
    }
    if let Some((code, message)) = error {
        return Err(match code.as_str() {
            "badResumptionToken" => PageError::BadToken,
            "noRecordsMatch" => PageError::NoRecords,
            _ => PageError::Protocol(format!("endpoint error `{code}`: {message}")),
        });
    }
    if !saw_verb {
        return Err(PageError::Protocol(format!("response is not a {verb} answer")));
    }
    Ok(page)
}
