//! In-process harvest endpoint over a nested export, for tests and demos.
//!
//! Each top-level `<unit>` of the export is one record. Datestamps are
//! assigned one day apart from `first_datestamp`. Resumption tokens have the
//! form `page:N:from`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use chrono::NaiveDate;
use quick_xml::events::Event;
use quick_xml::Reader;
use reqwest::Url;

use super::{entry_path, io_err, FixtureError, FixtureKind, ManifestEntry};

const WORKERS: usize = 4;

#[derive(Debug, Clone)]
pub struct HarvestServerOptions {
    pub page_size: usize,
    /// Serve truncated XML for this 1-based page.
    pub corrupt_page: Option<usize>,
    /// Answer the first N requests with 503.
    pub unavailable_first: usize,
    pub first_datestamp: NaiveDate,
    /// Identifier prefix; record `i` is `prefix:i`.
    pub prefix: String,
}

impl Default for HarvestServerOptions {
    fn default() -> Self {
        Self {
            page_size: 10,
            corrupt_page: None,
            unavailable_first: 0,
            first_datestamp: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
            prefix: "oai".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServedRecord {
    pub identifier: String,
    pub datestamp: String,
    pub payload: String,
}

struct State {
    records: Vec<ServedRecord>,
    options: HarvestServerOptions,
    log: Mutex<Vec<String>>,
    served: AtomicUsize,
}

pub struct MockHarvestServer {
    server: Arc<tiny_http::Server>,
    state: Arc<State>,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
    port: u16,
}

/// Byte slices of the top-level `<unit>` elements.
pub fn top_level_units(xml: &str) -> Result<Vec<String>, String> {
    let mut reader = Reader::from_str(xml);
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut out = Vec::new();
    loop {
        let before = reader.buffer_position() as usize;
        match reader.read_event().map_err(|e| format!("malformed XML at byte {}: {e}", reader.buffer_position()))? {
            Event::Start(e) if e.local_name().as_ref() == b"unit" => {
                if depth == 0 {
                    start = before;
                }
                depth += 1;
            }
            Event::Empty(e) if e.local_name().as_ref() == b"unit" && depth == 0 => {
                out.push(xml[before..reader.buffer_position() as usize].trim().to_string());
            }
            Event::End(e) if e.local_name().as_ref() == b"unit" => {
                depth -= 1;
                if depth == 0 {
                    out.push(xml[start..reader.buffer_position() as usize].trim().to_string());
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

impl MockHarvestServer {
    /// Serves the export on an ephemeral localhost port.
    pub fn start(xml: &str, options: HarvestServerOptions) -> Result<Self, String> {
        let records = top_level_units(xml)?
            .into_iter()
            .enumerate()
            .map(|(i, payload)| ServedRecord {
                identifier: format!("{}:{}", options.prefix, i + 1),
                datestamp: (options.first_datestamp + chrono::Duration::days(i as i64)).format("%Y-%m-%d").to_string(),
                payload,
            })
            .collect();
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").map_err(|e| e.to_string())?);
        let port = server.server_addr().to_ip().map(|a| a.port()).ok_or("server has no IP address")?;
        let state = Arc::new(State { records, options, log: Mutex::new(Vec::new()), served: AtomicUsize::new(0) });
        let stop = Arc::new(AtomicBool::new(false));
        let workers = (0..WORKERS)
            .map(|_| {
                let (server, state, stop) = (Arc::clone(&server), Arc::clone(&state), Arc::clone(&stop));
                thread::spawn(move || {
                    while !stop.load(Ordering::Relaxed) {
                        if let Ok(Some(request)) = server.recv_timeout(Duration::from_millis(50)) {
                            let (status, body) = state.answer(request.url());
                            let response = tiny_http::Response::from_string(body).with_status_code(status).with_header(
                                "Content-Type: text/xml; charset=utf-8".parse::<tiny_http::Header>().expect("static header"),
                            );
                            let _ = request.respond(response);
                        }
                    }
                })
            })
            .collect();
        Ok(Self { server, state, stop, workers, port })
    }

    /// Serves a nested-xml manifest entry.
    pub fn for_entry(dir: &Path, entry: &ManifestEntry, options: HarvestServerOptions) -> Result<Self, FixtureError> {
        if entry.kind != FixtureKind::NestedXml {
            return Err(FixtureError::Malformed { entry: entry.name.clone(), reason: "only nested-xml exports can be harvested".into() });
        }
        let path = entry_path(dir, entry);
        let xml = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        Self::start(&xml, options).map_err(|reason| FixtureError::Malformed { entry: entry.name.clone(), reason })
    }

    pub fn endpoint(&self) -> String {
        format!("http://127.0.0.1:{}/oai", self.port)
    }

    pub fn records(&self) -> &[ServedRecord] {
        &self.state.records
    }

    /// Request targets (path and query) in arrival order.
    pub fn requests(&self) -> Vec<String> {
        self.state.log.lock().expect("log lock").clone()
    }

    pub fn list_records_requests(&self) -> usize {
        self.requests().iter().filter(|r| r.contains("verb=ListRecords")).count()
    }
}

impl Drop for MockHarvestServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        self.server.unblock();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn envelope(verb: &str, inner: &str) -> String {
    format!("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OAI-PMH>\n<{verb}>\n{inner}</{verb}>\n</OAI-PMH>\n")
}

fn error(code: &str, message: &str) -> (u16, String) {
    (200, format!("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OAI-PMH><error code=\"{code}\">{message}</error></OAI-PMH>\n"))
}

fn record_xml(r: &ServedRecord) -> String {
    format!(
        "<record><header><identifier>{}</identifier><datestamp>{}</datestamp></header><metadata>{}</metadata></record>\n",
        r.identifier, r.datestamp, r.payload
    )
}

impl State {
    fn answer(&self, target: &str) -> (u16, String) {
        self.log.lock().expect("log lock").push(target.to_string());
        if self.served.fetch_add(1, Ordering::SeqCst) < self.options.unavailable_first {
            return (503, "unavailable".into());
        }
        let Ok(url) = Url::parse(&format!("http://localhost{target}")) else {
            return error("badArgument", "unparseable request");
        };
        let param = |name: &str| url.query_pairs().find(|(k, _)| k == name).map(|(_, v)| v.into_owned());
        match param("verb").as_deref() {
            Some("ListRecords") => self.list_records(param("resumptionToken"), param("from")),
            Some("GetRecord") => {
                let id = param("identifier").unwrap_or_default();
                match self.records.iter().find(|r| r.identifier == id) {
                    Some(r) => (200, envelope("GetRecord", &record_xml(r))),
                    None => error("idDoesNotExist", &id),
                }
            }
            _ => error("badVerb", "unsupported verb"),
        }
    }

    fn list_records(&self, token: Option<String>, from: Option<String>) -> (u16, String) {
        let (page, from) = match token {
            Some(t) => {
                let mut parts = t.splitn(3, ':');
                match (parts.next(), parts.next().and_then(|n| n.parse::<usize>().ok()), parts.next()) {
                    (Some("page"), Some(n), Some(f)) if n >= 1 => (n, f.to_string()),
                    _ => return error("badResumptionToken", &t),
                }
            }
            None => (1, from.unwrap_or_default()),
        };
        let day = from.get(..10).unwrap_or(&from);
        let selected: Vec<&ServedRecord> = self.records.iter().filter(|r| r.datestamp.as_str() >= day).collect();
        if selected.is_empty() {
            return error("noRecordsMatch", "no records match");
        }
        let size = self.options.page_size.max(1);
        let pages = selected.len().div_ceil(size);
        if page > pages {
            return error("badResumptionToken", &format!("page:{page}:{from}"));
        }
        if self.options.corrupt_page == Some(page) {
            return (200, "<?xml version=\"1.0\"?>\n<OAI-PMH><ListRecords><record><header><identifier>".into());
        }
        let mut inner = String::new();
        for r in &selected[(page - 1) * size..(page * size).min(selected.len())] {
            inner.push_str(&record_xml(r));
        }
        if page < pages {
            let _ = writeln!(inner, "<resumptionToken>page:{}:{from}</resumptionToken>", page + 1);
        }
        (200, envelope("ListRecords", &inner))
    }
}
