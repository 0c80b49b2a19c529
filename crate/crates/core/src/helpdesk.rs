//! Routes free-text questions to institutions.
//!
//! Each repository holding at least one unit gets a profile document: unit
//! titles, keyword/department labels, person/place labels and the holdings
//! summary. Profiles are weighted with the search formula, with N = number
//! of profiles.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::archival::repository_of;
use crate::records::repository_from_node;
use crate::registry::{Graph, NodeKind};
use crate::search::{index_tokens, Field, IndexDocument, SearchIndex};
use crate::text::Stopwords;
use crate::vocab::{ExpandedQuery, Thesaurus};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HelpdeskError {
    #[error("question has no searchable words")]
    EmptyQuestion,
    #[error("knowledge base has not been built")]
    KbNotBuilt,
}

impl HelpdeskError {
    pub fn code(&self) -> &'static str {
        match self {
            HelpdeskError::EmptyQuestion => "empty-question",
            HelpdeskError::KbNotBuilt => "kb-not-built",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedInstitution {
    pub repository_ehri_id: String,
    pub name: String,
    pub score: f64,
    pub matched_terms: Vec<String>,
    pub contact: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoutingAnswer {
    pub ranked: Vec<RankedInstitution>,
    pub question_trace: ExpandedQuery,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    profiles: SearchIndex,
    /// id → (name, contact)
    institutions: BTreeMap<String, (String, String)>,
}

impl KnowledgeBase {
    /// Builds profiles from unit documents of a search index over the same
    /// graph version.
    pub fn build(graph: &Graph, units: &SearchIndex, stopwords: Stopwords) -> Self {
        let mut profiles: BTreeMap<String, IndexDocument> = BTreeMap::new();
        for doc in units.documents() {
            let Some(repo) = repository_of(&doc.unit_global_id) else { continue };
            if graph.node(repo).is_none_or(|n| n.kind != NodeKind::Repository) {
                continue;
            }
            let profile = profiles.entry(repo.to_string()).or_insert_with(|| IndexDocument::new(repo));
            for field in [Field::Title, Field::Keywords, Field::Names] {
                if let Some(tokens) = doc.field_tokens.get(&field) {
                    profile.field_tokens.entry(field).or_default().extend(tokens.iter().cloned());
                }
            }
        }
        let mut institutions = BTreeMap::new();
        for (id, profile) in profiles.iter_mut() {
            let repo = repository_from_node(graph.node(id).expect("checked above"));
            let summary = index_tokens(&repo.holdings_summary, &stopwords);
            if !summary.is_empty() {
                profile.field_tokens.insert(Field::ScopeContent, summary);
            }
            profile.title = repo.authorized_form_of_name.clone();
            let contact = if repo.contact.is_empty() { repo.address.clone() } else { repo.contact.clone() };
            institutions.insert(id.clone(), (repo.authorized_form_of_name, contact));
        }
        Self { profiles: SearchIndex::from_documents(profiles.into_values().collect(), stopwords, graph.version()), institutions }
    }

    pub fn len(&self) -> usize {
        self.institutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.institutions.is_empty()
    }

    pub fn profiles(&self) -> &SearchIndex {
        &self.profiles
    }

    /// Repositories sharing at least one expanded question term with their
    /// profile, by (score desc, id asc).
    pub fn route(&self, thesaurus: &Thesaurus, question: &str, languages: &[String]) -> Result<RoutingAnswer, HelpdeskError> {
        let stopwords = self.profiles.stopwords();
        if index_tokens(question, stopwords).is_empty() {
            return Err(HelpdeskError::EmptyQuestion);
        }
        let trace = thesaurus.expand_query(&self.profiles.query_terms(question, thesaurus), languages, None);
        let terms: BTreeSet<String> = trace.expanded_terms.iter().flat_map(|t| index_tokens(t, stopwords)).collect();
        let mut ranked: Vec<RankedInstitution> = self
            .profiles
            .documents()
            .iter()
            .filter_map(|doc| {
                let matched: Vec<String> = terms.iter().filter(|t| self.profiles.contains_term(&doc.unit_global_id, t)).cloned().collect();
                if matched.is_empty() {
                    return None;
                }
                let (name, contact) = self.institutions[&doc.unit_global_id].clone();
                Some(RankedInstitution {
                    repository_ehri_id: doc.unit_global_id.clone(),
                    name,
                    score: self.profiles.score(&doc.unit_global_id, &terms),
                    matched_terms: matched,
                    contact,
                })
            })
            .collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.repository_ehri_id.cmp(&b.repository_ehri_id)));
        Ok(RoutingAnswer { ranked, question_trace: trace })
    }
}

/// Routing against a possibly missing knowledge base.
pub fn route(kb: Option<&KnowledgeBase>, thesaurus: &Thesaurus, question: &str, languages: &[String]) -> Result<RoutingAnswer, HelpdeskError> {
    kb.ok_or(HelpdeskError::KbNotBuilt)?.route(thesaurus, question, languages)
}
