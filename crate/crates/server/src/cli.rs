//! Command line. Results go to stdout as JSON, diagnostics to stderr.
//! Exit codes: 0 success, 1 domain error, 2 usage or config error,
//! 3 listen address unavailable.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nexus_core::archival::{validate_country_report, CountryReport};
use nexus_core::fixtures::{self, Delivery};
use nexus_core::guide::{self, GuideConfig, DEFAULT_COPY_THRESHOLD};
use nexus_core::ingest::MappingProfile;
use nexus_core::portal::{Portal, PortalError, VocabularyTexts};
use nexus_core::registry::{Graph, SNAPSHOT_HEADER};
use nexus_core::search::Filters;

use crate::api::{self, AppState};
use crate::config::{ConfigError, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "nexus", version, about = "Archival portal over dispersed Holocaust-era collections")]
pub struct Cli {
    /// Service configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Graph snapshot to read and update; overrides the config.
    #[arg(long, global = true)]
    pub snapshot: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API until interrupted, then write the snapshot.
    Serve {
        /// Overrides listenAddress.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Import an export file, a harvest endpoint, or repository descriptions.
    Ingest(IngestArgs),
    /// Multilingual search over units.
    Search {
        query: String,
        /// Comma-separated language codes.
        #[arg(long, value_delimiter = ',')]
        lang: Vec<String>,
        /// Facet constraint `name=value`; repeatable.
        #[arg(long = "facet")]
        facets: Vec<String>,
        #[arg(long, default_value_t = 1)]
        page: usize,
        #[arg(long)]
        size: Option<usize>,
    },
    /// Route a research question to institutions.
    Ask {
        question: String,
        #[arg(long, value_delimiter = ',')]
        lang: Vec<String>,
    },
    /// Load or inspect controlled vocabularies.
    #[command(subcommand)]
    Vocab(VocabCommand),
    /// Manage research guides.
    #[command(subcommand)]
    Guide(GuideCommand),
    /// Check a snapshot, country report, or fixture directory.
    Validate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ValidateKind::Auto)]
        kind: ValidateKind,
    },
    /// Write the current graph as a snapshot file.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate or load the seeded demonstration corpus.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Export file to parse.
    pub file: Option<PathBuf>,
    /// Harvest endpoint instead of a file.
    #[arg(long, conflicts_with = "file")]
    pub harvest: Option<String>,
    /// Only records stamped on or after this date (harvest only).
    #[arg(long, requires = "harvest")]
    pub from: Option<String>,
    /// Mapping profile (TOML).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Repository code the units belong to.
    #[arg(long)]
    pub repository: Option<String>,
    /// Repository descriptions (JSON array) imported first.
    #[arg(long)]
    pub repositories: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VocabCommand {
    Load {
        #[arg(long)]
        thesaurus: Vec<PathBuf>,
        #[arg(long)]
        persons: Vec<PathBuf>,
        #[arg(long)]
        places: Vec<PathBuf>,
        #[arg(long)]
        concordance: Vec<PathBuf>,
    },
    /// Show how terms expand through the thesaurus.
    Expand {
        terms: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        lang: Vec<String>,
        #[arg(long)]
        max_depth: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GuideCommand {
    /// Store a guide config and build the guide.
    Put { config: PathBuf },
    /// Print a built guide.
    Show { id: String },
    /// Load an event file.
    Events { file: PathBuf },
    /// Places of the guide as a feature collection.
    Map { id: String },
    /// Events within a date range.
    Timeline {
        id: String,
        #[arg(long, default_value = "0001")]
        from: String,
        #[arg(long, default_value = "9999")]
        to: String,
    },
    /// Biography of a person with linked units and events.
    Person { id: String, person: String },
    /// Suggest copies across repositories and optionally confirm them all.
    Copies {
        id: String,
        #[arg(long, default_value_t = DEFAULT_COPY_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        confirm_all: bool,
        #[arg(long, default_value = "cli")]
        source: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixturesCommand {
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = fixtures::DEFAULT_SEED)]
        seed: u64,
    },
    /// Load a generated directory into the snapshot.
    Load { dir: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ValidateKind {
    Auto,
    Snapshot,
    CountryReport,
    Fixtures,
}

/// Process outcome, mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot listen on {addr}: {reason}")]
    PortUnavailable { addr: String, reason: String },
    #[error("{0:#}")]
    Domain(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) | Failure::Config(_) => 2,
            Failure::PortUnavailable { .. } => 3,
        }
    }

    pub fn code(&self) -> &str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Config(e) => e.code(),
            Failure::PortUnavailable { .. } => "port-unavailable",
            Failure::Domain(e) => e.downcast_ref::<PortalError>().map(PortalError::code).unwrap_or("domain-error"),
        }
    }
}

impl From<PortalError> for Failure {
    fn from(e: PortalError) -> Self {
        Failure::Domain(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error[{}]: {f}", f.code());
            f.exit_code()
        }
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(anyhow::Error::from(e).context("writing output").into()),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    Ok(std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

struct Session {
    config: ServiceConfig,
    snapshot: PathBuf,
}

impl Session {
    fn new(cli: &Cli) -> Result<Self, Failure> {
        let config = match &cli.config {
            Some(path) => ServiceConfig::load(path)?,
            None => ServiceConfig::default(),
        };
        let snapshot = cli.snapshot.clone().unwrap_or_else(|| config.snapshot_path());
        Ok(Self { config, snapshot })
    }

    fn open(&self) -> Result<Portal, Failure> {
        Ok(Portal::open(&self.snapshot, self.config.stopwords()?)?)
    }

    fn save(&self, portal: &Portal) -> Result<(), Failure> {
        if let Some(dir) = self.snapshot.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let lines = portal.snapshot(&self.snapshot)?;
        tracing::info!(path = %self.snapshot.display(), lines, "snapshot written");
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let session = Session::new(&cli)?;
    match cli.command {
        Command::Serve { listen } => serve(&session, listen),
        Command::Ingest(args) => ingest(&session, args),
        Command::Search { query, lang, facets, page, size } => {
            let mut filters = Filters::new();
            for f in facets {
                let (k, v) = f.split_once('=').ok_or_else(|| Failure::Usage(format!("facet `{f}` is not name=value")))?;
                filters.insert(k.into(), v.into());
            }
            let size = size.unwrap_or(session.config.page_size_default);
            if size == 0 || size > session.config.page_size_max {
                return Err(Failure::Usage(format!("--size must be between 1 and {}", session.config.page_size_max)));
            }
            emit(&session.open()?.state().search(&query, &lang, &filters, page, size)?)
        }
        Command::Ask { question, lang } => emit(&session.open()?.state().ask(&question, &lang)?),
        Command::Vocab(VocabCommand::Load { thesaurus, persons, places, concordance }) => {
            let all = |paths: &[PathBuf]| paths.iter().map(|p| read(p)).collect::<Result<Vec<_>, _>>();
            let texts = VocabularyTexts {
                thesauri: all(&thesaurus)?,
                persons: all(&persons)?,
                places: all(&places)?,
                concordances: all(&concordance)?,
            };
            let portal = session.open()?;
            portal.load_vocabulary(&texts)?;
            session.save(&portal)?;
            let state = portal.state();
            emit(&serde_json::json!({
                "graphVersion": state.graph.version(),
                "concepts": state.vocab.thesaurus.len(),
                "persons": state.vocab.authorities.persons().count(),
                "places": state.vocab.authorities.places().count(),
            }))
        }
        Command::Vocab(VocabCommand::Expand { terms, lang, max_depth }) => {
            emit(&session.open()?.state().vocab.thesaurus.expand_query(&terms, &lang, max_depth))
        }
        Command::Guide(cmd) => guide_command(&session, cmd),
        Command::Validate { path, kind } => validate(&path, kind),
        Command::Export { out } => {
            let portal = session.open()?;
            let lines = portal.snapshot(&out)?;
            emit(&serde_json::json!({"path": out, "lines": lines, "graphVersion": portal.state().graph.version()}))
        }
        Command::Fixtures(FixturesCommand::Generate { out, seed }) => {
            emit(&fixtures::generate_fixtures(&out, seed).map_err(PortalError::from)?)
        }
        Command::Fixtures(FixturesCommand::Load { dir }) => {
            let portal = session.open()?;
            let deliveries: BTreeMap<String, Delivery> = BTreeMap::new();
            let reports = fixtures::load_portal(&portal, &dir, &deliveries)?;
            session.save(&portal)?;
            emit(&reports)
        }
    }
}

fn ingest(session: &Session, args: IngestArgs) -> Result<(), Failure> {
    if args.file.is_none() && args.harvest.is_none() && args.repositories.is_none() {
        return Err(Failure::Usage("give an export file, --harvest URL, or --repositories FILE".into()));
    }
    let portal = session.open()?;
    let mut out = serde_json::Map::new();
    if let Some(path) = &args.repositories {
        let repos: Vec<nexus_core::archival::Repository> = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        out.insert("repositories".into(), serde_json::to_value(portal.import_repositories(&repos)?).context("report")?);
    }
    if args.file.is_some() || args.harvest.is_some() {
        let (Some(profile), Some(repo)) = (&args.profile, &args.repository) else {
            return Err(Failure::Usage("--profile and --repository are required to import units".into()));
        };
        let profile = MappingProfile::parse(&read(profile)?).map_err(PortalError::from)?;
        let report = match (&args.file, &args.harvest) {
            (Some(file), _) => {
                let bytes = std::fs::read(file).with_context(|| format!("reading {}", file.display()))?;
                portal.ingest(&bytes, &profile, repo)?
            }
            (None, Some(endpoint)) => portal.harvest(endpoint, args.from.as_deref(), &profile, repo, session.config.harvest())?,
            (None, None) => unreachable!("checked above"),
        };
        out.insert("units".into(), serde_json::to_value(report).context("report")?);
    }
    session.save(&portal)?;
    out.insert("graphVersion".into(), portal.state().graph.version().into());
    emit(&out)
}

fn guide_command(session: &Session, cmd: GuideCommand) -> Result<(), Failure> {
    let portal = session.open()?;
    match cmd {
        GuideCommand::Put { config } => {
            let config = GuideConfig::parse(&read(&config)?).map_err(PortalError::from)?;
            let built = portal.put_guide(&config)?;
            session.save(&portal)?;
            emit(&built.stats)
        }
        GuideCommand::Show { id } => emit(portal.state().guide(&id)?),
        GuideCommand::Events { file } => {
            let n = portal.load_events(&read(&file)?)?;
            session.save(&portal)?;
            emit(&serde_json::json!({"events": n, "graphVersion": portal.state().graph.version()}))
        }
        GuideCommand::Map { id } => {
            let state = portal.state();
            emit(&guide::map_features(state.guide(&id)?, &state.graph))
        }
        GuideCommand::Timeline { id, from, to } => {
            let state = portal.state();
            let parse = |s: &str| s.parse().map_err(|e| Failure::Usage(format!("`{s}`: {e}")));
            emit(&guide::timeline_query(state.guide(&id)?, parse(&from)?, parse(&to)?).map_err(PortalError::from)?)
        }
        GuideCommand::Person { id, person } => {
            let state = portal.state();
            emit(&guide::biography(state.guide(&id)?, &state.graph, &person).map_err(PortalError::from)?)
        }
        GuideCommand::Copies { id, threshold, confirm_all, source } => {
            let suggested = portal.suggest_copies(&id, threshold)?;
            if confirm_all {
                let confirmed = portal.confirm_all(&id, &source)?;
                session.save(&portal)?;
                emit(&confirmed)
            } else {
                emit(&suggested)
            }
        }
    }
}

fn validate(path: &Path, kind: ValidateKind) -> Result<(), Failure> {
    let kind = match kind {
        ValidateKind::Auto if path.is_dir() => ValidateKind::Fixtures,
        ValidateKind::Auto if read(path)?.starts_with(SNAPSHOT_HEADER) => ValidateKind::Snapshot,
        ValidateKind::Auto => ValidateKind::CountryReport,
        k => k,
    };
    match kind {
        ValidateKind::Snapshot => {
            let graph = Graph::load(path).map_err(PortalError::from)?;
            let issues = graph.check_invariants();
            emit(&serde_json::json!({
                "kind": "snapshot",
                "valid": issues.is_empty(),
                "nodes": graph.node_count(),
                "edges": graph.edge_count(),
                "issues": issues,
            }))?;
            if issues.is_empty() {
                Ok(())
            } else {
                Err(anyhow::anyhow!("{} invariant violations", issues.len()).into())
            }
        }
        ValidateKind::CountryReport => {
            let report: CountryReport = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            let result = validate_country_report(&report);
            emit(&result)?;
            if result.has_errors() {
                Err(anyhow::anyhow!("country report rejected: {}", result.codes().join(", ")).into())
            } else {
                Ok(())
            }
        }
        ValidateKind::Fixtures => emit(&fixtures::verify_manifest(path).map_err(PortalError::from)?),
        ValidateKind::Auto => unreachable!("resolved above"),
    }
}

fn serve(session: &Session, listen: Option<String>) -> Result<(), Failure> {
    let addr = listen.unwrap_or_else(|| session.config.listen_address.clone());
    if addr.parse::<std::net::SocketAddr>().is_err() {
        return Err(Failure::Usage(format!("listen address `{addr}` is not host:port")));
    }
    let vocabulary = session.config.vocabulary()?;
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind(&addr))
        .map_err(|e| Failure::PortUnavailable { addr: addr.clone(), reason: e.to_string() })?;
    let portal = Arc::new(session.open()?);
    if !(vocabulary.thesauri.is_empty() && vocabulary.persons.is_empty() && vocabulary.places.is_empty() && vocabulary.concordances.is_empty()) {
        portal.load_vocabulary(&vocabulary)?;
    }
    let state = AppState {
        portal: portal.clone(),
        page_size_default: session.config.page_size_default,
        page_size_max: session.config.page_size_max,
    };
    let bound = listener.local_addr().context("reading bound address")?;
    // one line, so a supervisor can read the bound address
    println!("{}", serde_json::json!({"listening": bound.to_string(), "health": portal.state().health()}));
    runtime
        .block_on(async move { axum::serve(listener, api::router(state)).with_graceful_shutdown(shutdown_signal()).await })
        .context("serving")?;
    session.save(&portal)?;
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
    tracing::info!("shutting down");
}
