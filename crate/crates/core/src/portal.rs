//! One access point over the registry and everything derived from it.
//!
//! Writes go through the registry writer; after each successful write the
//! vocabulary, search index, knowledge base and guides are rebuilt from the
//! new graph version and published together. Readers take an
//! `Arc<PortalState>` and never observe a half-built state.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use crate::annotations::{self, Annotation, AnnotationError, Body, Decision, State};
use crate::archival::{repository_of, DocumentaryUnit, Repository};
use crate::fixtures::FixtureError;
use crate::guide::{self, build_guide, CopyAssertion, Guide, GuideConfig, GuideError};
use crate::helpdesk::{HelpdeskError, KnowledgeBase, RoutingAnswer};
use crate::ingest::harvest::{records_to_document, HarvestConfig, Harvester};
use crate::ingest::{self, import_parsed, IngestError, ImportReport, MappingProfile};
use crate::records::{repository_from_node, unit_from_node};
use crate::registry::{Direction, EdgeLabel, Graph, NodeKind, Properties, Registry, RegistryError, Value};
use crate::search::{Filters, SearchError, SearchIndex, SearchResult};
use crate::text::Stopwords;
use crate::vocab::{Authorities, Thesaurus, VocabError, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum PortalError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Helpdesk(#[from] HelpdeskError),
    #[error(transparent)]
    Guide(#[from] GuideError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("unknown repository `{0}`")]
    UnknownRepository(String),
    #[error("unknown guide `{0}`")]
    UnknownGuide(String),
}

impl PortalError {
    pub fn code(&self) -> &'static str {
        match self {
            PortalError::Ingest(e) => e.code(),
            PortalError::Search(e) => e.code(),
            PortalError::Annotation(e) => e.code(),
            PortalError::Helpdesk(e) => e.code(),
            PortalError::Guide(e) => e.code(),
            PortalError::Vocab(e) => e.code(),
            PortalError::Registry(e) => e.code(),
            PortalError::Fixture(e) => e.code(),
            PortalError::UnknownUnit(_) => "unknown-unit",
            PortalError::UnknownRepository(_) => "unknown-repository",
            PortalError::UnknownGuide(_) => "unknown-guide",
        }
    }

    /// Whether the error means a requested entity does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self.code(),
            "unknown-unit" | "unknown-repository" | "unknown-guide" | "unknown-target" | "unknown-annotation" | "unknown-person" | "unknown-node"
        )
    }
}

/// Everything derived from one graph version.
#[derive(Debug)]
pub struct PortalState {
    pub graph: Arc<Graph>,
    pub vocab: Vocabulary,
    pub index: SearchIndex,
    pub kb: KnowledgeBase,
    pub guides: BTreeMap<String, Guide>,
    /// Guides whose stored config no longer builds, with the reason.
    pub guide_errors: BTreeMap<String, String>,
}

impl PortalState {
    fn derive(graph: Arc<Graph>, stopwords: &Stopwords) -> Result<Self, PortalError> {
        let vocab = Vocabulary::from_graph(&graph)?;
        let index = SearchIndex::build(&graph, &vocab, stopwords.clone());
        let kb = KnowledgeBase::build(&graph, &index, stopwords.clone());
        let mut guides = BTreeMap::new();
        let mut guide_errors = BTreeMap::new();
        for node in graph.nodes_of_kind(NodeKind::GuideEntity) {
            let built = GuideConfig::parse(node.text("config").unwrap_or_default()).and_then(|c| build_guide(&graph, &vocab, &c));
            match built {
                Ok(g) => {
                    guides.insert(node.id.clone(), g);
                }
                Err(e) => {
                    tracing::warn!(guide = %node.id, error = %e, "guide no longer builds");
                    guide_errors.insert(node.id.clone(), e.to_string());
                }
            }
        }
        Ok(Self { graph, vocab, index, kb, guides, guide_errors })
    }

    pub fn guide(&self, id: &str) -> Result<&Guide, PortalError> {
        self.guides.get(id).ok_or_else(|| PortalError::UnknownGuide(id.to_string()))
    }

    pub fn repositories(&self) -> Vec<Repository> {
        self.graph.nodes_of_kind(NodeKind::Repository).map(repository_from_node).collect()
    }

    pub fn repository(&self, id: &str) -> Result<Repository, PortalError> {
        match self.graph.node(id) {
            Some(n) if n.kind == NodeKind::Repository => Ok(repository_from_node(n)),
            _ => Err(PortalError::UnknownRepository(id.to_string())),
        }
    }

    pub fn unit_count(&self) -> usize {
        self.graph.nodes_of_kind(NodeKind::Unit).count()
    }

    pub fn search(&self, query: &str, languages: &[String], filters: &Filters, page: usize, size: usize) -> Result<SearchResult, PortalError> {
        Ok(self.index.search(&self.vocab.thesaurus, query, languages, filters, page, size)?)
    }

    pub fn ask(&self, question: &str, languages: &[String]) -> Result<RoutingAnswer, PortalError> {
        Ok(self.kb.route(&self.vocab.thesaurus, question, languages)?)
    }

    pub fn unit_view(&self, id: &str) -> Result<UnitView, PortalError> {
        let node = self.graph.node(id).filter(|n| n.kind == NodeKind::Unit).ok_or_else(|| PortalError::UnknownUnit(id.to_string()))?;
        let unit = unit_from_node(node, true).ok_or_else(|| PortalError::UnknownUnit(id.to_string()))?;
        let mut ancestors = Vec::new();
        let mut current = self.graph.parent(id, EdgeLabel::PartOf);
        while let Some(p) = current {
            let title = self.graph.node(p).and_then(|n| n.text("title")).unwrap_or_default().to_string();
            ancestors.push(UnitRef { unit_global_id: p.to_string(), title });
            current = self.graph.parent(p, EdgeLabel::PartOf);
        }
        ancestors.reverse();
        let refs = |ids: Vec<String>| -> Vec<UnitRef> {
            ids.into_iter()
                .map(|c| UnitRef { title: self.graph.node(&c).and_then(|n| n.text("title")).unwrap_or_default().to_string(), unit_global_id: c })
                .collect()
        };
        let children = refs(self.graph.neighbor_ids(id, EdgeLabel::PartOf, Direction::In)?);
        let copies = self
            .graph
            .neighbor_ids(id, EdgeLabel::CopyOf, Direction::Both)?
            .into_iter()
            .map(|c| CopyRef {
                repository: repository_of(&c).unwrap_or_default().to_string(),
                title: self.graph.node(&c).and_then(|n| n.text("title")).unwrap_or_default().to_string(),
                unit_global_id: c,
            })
            .collect();
        Ok(UnitView {
            repository: repository_of(id).unwrap_or_default().to_string(),
            unit,
            ancestors,
            children,
            copies,
            annotations: annotations::list_annotations(&self.graph, id, None)?,
        })
    }

    pub fn health(&self) -> Health {
        let stats = self.index.stats();
        Health {
            status: "ok".into(),
            graph_version: self.graph.version(),
            nodes: self.graph.node_count(),
            edges: self.graph.edge_count(),
            repositories: self.graph.nodes_of_kind(NodeKind::Repository).count(),
            units: self.unit_count(),
            documents: stats.documents,
            institutions: self.kb.len(),
            guides: self.guides.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Health {
    pub status: String,
    pub graph_version: u64,
    pub nodes: usize,
    pub edges: usize,
    pub repositories: usize,
    pub units: usize,
    pub documents: usize,
    pub institutions: usize,
    pub guides: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnitRef {
    pub unit_global_id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CopyRef {
    pub unit_global_id: String,
    pub repository: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnitView {
    pub unit: DocumentaryUnit,
    pub repository: String,
    /// Root first.
    pub ancestors: Vec<UnitRef>,
    pub children: Vec<UnitRef>,
    /// Units linked by `copyOf`, held elsewhere or not.
    pub copies: Vec<CopyRef>,
    pub annotations: Vec<Annotation>,
}

/// Vocabulary file contents to load in one step.
#[derive(Debug, Clone, Default)]
pub struct VocabularyTexts {
    pub thesauri: Vec<String>,
    pub persons: Vec<String>,
    pub places: Vec<String>,
    pub concordances: Vec<String>,
}

pub struct Portal {
    registry: Registry,
    stopwords: Stopwords,
    state: RwLock<Arc<PortalState>>,
    /// Last suggestion run per guide.
    candidates: Mutex<BTreeMap<String, Vec<CopyAssertion>>>,
}

impl Portal {
    pub fn new(graph: Graph, stopwords: Stopwords) -> Result<Self, PortalError> {
        let registry = Registry::new(graph);
        let state = PortalState::derive(registry.read(), &stopwords)?;
        Ok(Self { registry, stopwords, state: RwLock::new(Arc::new(state)), candidates: Mutex::new(BTreeMap::new()) })
    }

    /// Starts from a snapshot file, or empty when the file does not exist.
    pub fn open(snapshot: &Path, stopwords: Stopwords) -> Result<Self, PortalError> {
        let graph = if snapshot.exists() { Graph::load(snapshot)? } else { Graph::new() };
        Self::new(graph, stopwords)
    }

    pub fn state(&self) -> Arc<PortalState> {
        self.state.read().expect("state lock poisoned").clone()
    }

    pub fn graph(&self) -> Arc<Graph> {
        self.registry.read()
    }

    pub fn snapshot(&self, path: &Path) -> Result<usize, PortalError> {
        Ok(self.registry.read().snapshot(path)?)
    }

    /// Runs a write batch, then republishes the derived state.
    pub fn write<T>(&self, batch: impl FnOnce(&mut Graph) -> Result<T, PortalError>) -> Result<T, PortalError> {
        let out = self.registry.write(batch)?;
        self.refresh()?;
        Ok(out)
    }

    fn refresh(&self) -> Result<(), PortalError> {
        let derived = PortalState::derive(self.registry.read(), &self.stopwords)?;
        let mut state = self.state.write().expect("state lock poisoned");
        if derived.graph.version() >= state.graph.version() {
            *state = Arc::new(derived);
        }
        Ok(())
    }

    pub fn load_vocabulary(&self, texts: &VocabularyTexts) -> Result<(), PortalError> {
        self.write(|g| {
            if !texts.thesauri.is_empty() {
                let joined = texts.thesauri.join("\n");
                let mut existing = Thesaurus::from_graph(g)?;
                let incoming = Thesaurus::parse(&joined)?;
                let mut concepts: BTreeMap<String, _> = existing.concepts().map(|c| (c.concept_id.clone(), c.clone())).collect();
                for c in incoming.concepts() {
                    concepts.insert(c.concept_id.clone(), c.clone());
                }
                existing = Thesaurus::from_concepts(concepts)?;
                existing.write_to_graph(g)?;
            }
            let mut authorities = Authorities::from_graph(g)?;
            for t in &texts.persons {
                authorities.load_persons_str(t)?;
            }
            for t in &texts.places {
                authorities.load_places_str(t)?;
            }
            for t in &texts.concordances {
                authorities.load_concordance_str(t)?;
            }
            authorities.write_to_graph(g)?;
            Ok(())
        })
    }

    pub fn import_repositories(&self, repositories: &[Repository]) -> Result<ImportReport, PortalError> {
        self.write(|g| Ok(ingest::import_repositories(g, repositories)))
    }

    /// Parses an export and imports it as one batch.
    pub fn ingest(&self, bytes: &[u8], profile: &MappingProfile, repository: &str) -> Result<ImportReport, PortalError> {
        profile.check()?;
        let batch = ingest::parse(bytes, profile)?;
        self.write(|g| Ok(import_parsed(g, &batch, repository)?))
    }

    /// Harvests an endpoint and imports everything or nothing.
    pub fn harvest(
        &self,
        endpoint: &str,
        from: Option<&str>,
        profile: &MappingProfile,
        repository: &str,
        config: HarvestConfig,
    ) -> Result<ImportReport, PortalError> {
        let records = Harvester::http(config).list_records(endpoint, from)?;
        self.ingest(records_to_document(&records).as_bytes(), profile, repository)
    }

    pub fn load_events(&self, text: &str) -> Result<usize, PortalError> {
        let events = guide::parse_events(text)?;
        self.write(|g| Ok(guide::write_events(g, &events)?))
    }

    /// Stores a guide config and builds it; the config is kept in the graph
    /// so the guide is rebuilt on every later version.
    pub fn put_guide(&self, config: &GuideConfig) -> Result<Guide, PortalError> {
        {
            let state = self.state();
            build_guide(&state.graph, &state.vocab, config)?;
        }
        self.write(|g| {
            let mut props = Properties::new();
            props.insert("config".into(), Value::text(config.to_toml()));
            g.put_node(NodeKind::GuideEntity, &config.guide_id, props)?;
            Ok(())
        })?;
        Ok(self.state().guide(&config.guide_id)?.clone())
    }

    pub fn suggest_copies(&self, guide_id: &str, threshold: f64) -> Result<Vec<CopyAssertion>, PortalError> {
        let state = self.state();
        let found = guide::suggest_copies(state.guide(guide_id)?, &state.graph, threshold)?;
        self.candidates.lock().expect("candidates lock").insert(guide_id.to_string(), found.clone());
        Ok(found)
    }

    pub fn confirm_copy(&self, guide_id: &str, unit_a: &str, unit_b: &str, source: &str) -> Result<CopyAssertion, PortalError> {
        self.state().guide(guide_id)?;
        let candidates = self.candidates.lock().expect("candidates lock").get(guide_id).cloned().unwrap_or_default();
        self.write(|g| Ok(guide::confirm_copy(g, &candidates, unit_a, unit_b, source)?))
    }

    /// Confirms every candidate of the last suggestion run for a guide.
    pub fn confirm_all(&self, guide_id: &str, source: &str) -> Result<Vec<CopyAssertion>, PortalError> {
        self.state().guide(guide_id)?;
        let candidates = self.candidates.lock().expect("candidates lock").get(guide_id).cloned().unwrap_or_default();
        self.write(|g| {
            candidates.iter().map(|c| Ok(guide::confirm_copy(g, &candidates, &c.unit_a, &c.unit_b, source)?)).collect()
        })
    }

    pub fn annotate(&self, target: &str, body: Body, author: &str) -> Result<Annotation, PortalError> {
        self.write(|g| Ok(annotations::create_annotation(g, target, body, author, Utc::now())?))
    }

    pub fn moderate(&self, id: &str, decision: Decision, moderator: &str, note: Option<&str>) -> Result<Annotation, PortalError> {
        self.write(|g| Ok(annotations::moderate(g, id, decision, moderator, note)?))
    }

    pub fn annotations(&self, target: &str, state: Option<State>) -> Result<Vec<Annotation>, PortalError> {
        Ok(annotations::list_annotations(&self.graph(), target, state)?)
    }
}
