//! Ranked, faceted retrieval over unit nodes.
//!
//! Document term weight: `Σ_field w_field × (1 + ln tf) × ln((N+1)/(df+1))`
//! over the fields holding the term. Query terms are weighted by their idf
//! alone. Score is the cosine of the two vectors (0 when either is zero).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::archival::repository_of;
use crate::ingest::References;
use crate::records::unit_from_node;
use crate::registry::{Direction, EdgeLabel, Graph, NodeKind};
use crate::text::{normalize, tokenize, Stopwords};
use crate::vocab::{ExpandedQuery, Thesaurus, Vocabulary};

pub const MAX_PAGE_SIZE: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("unknown facet `{0}`")]
    InvalidFacet(String),
    #[error("invalid page: {0}")]
    InvalidPage(String),
}

impl SearchError {
    pub fn code(&self) -> &'static str {
        match self {
            SearchError::InvalidFacet(_) => "invalid-facet",
            SearchError::InvalidPage(_) => "invalid-page",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Field {
    Title,
    Keywords,
    Names,
    ScopeContent,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Title, Field::Keywords, Field::Names, Field::ScopeContent];

    pub fn weight(self) -> f64 {
        match self {
            Field::Title => 3.0,
            Field::Keywords | Field::Names => 2.0,
            Field::ScopeContent => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Facet {
    Repository,
    Country,
    Level,
    LanguageOfMaterial,
    DateBucket,
}

impl Facet {
    pub const ALL: [Facet; 5] = [Facet::Repository, Facet::Country, Facet::Level, Facet::LanguageOfMaterial, Facet::DateBucket];

    pub fn as_str(self) -> &'static str {
        match self {
            Facet::Repository => "repository",
            Facet::Country => "country",
            Facet::Level => "level",
            Facet::LanguageOfMaterial => "languageOfMaterial",
            Facet::DateBucket => "dateBucket",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Facet {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Facet::ALL.iter().copied().find(|f| f.as_str() == s).ok_or_else(|| SearchError::InvalidFacet(s.to_string()))
    }
}

/// Decade label of a year, e.g. `1940s`.
pub fn decade(year: i32) -> String {
    format!("{}s", year.div_euclid(10) * 10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexDocument {
    pub unit_global_id: String,
    pub field_tokens: BTreeMap<Field, Vec<String>>,
    /// Facet values; a document may hold several values of one facet.
    pub facets: BTreeMap<Facet, Vec<String>>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub copies: usize,
}

impl IndexDocument {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            unit_global_id: id.into(),
            field_tokens: BTreeMap::new(),
            facets: BTreeMap::new(),
            title: String::new(),
            copies: 0,
        }
    }

    fn facet_values(&self, facet: Facet) -> &[String] {
        self.facets.get(&facet).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexStats {
    pub graph_version: u64,
    pub documents: usize,
    pub terms: usize,
    pub postings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Hit {
    pub unit_global_id: String,
    pub score: f64,
    pub matched_terms: Vec<String>,
    pub title: String,
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResult {
    pub hits: Vec<Hit>,
    pub facet_counts: BTreeMap<Facet, BTreeMap<String, usize>>,
    pub total_hits: usize,
    pub page: usize,
    pub page_size: usize,
    pub applied_expansion: ExpandedQuery,
}

/// Facet constraints by facet name; all must hold.
pub type Filters = BTreeMap<String, String>;

/// Immutable index over one graph version.
#[derive(Debug, Clone, Default)]
pub struct SearchIndex {
    graph_version: u64,
    docs: Vec<IndexDocument>,
    vectors: Vec<BTreeMap<String, f64>>,
    norms: Vec<f64>,
    df: BTreeMap<String, usize>,
    postings: BTreeMap<String, Vec<usize>>,
    stopwords: Stopwords,
}

/// Tokens of `text` with stopwords (every language) removed.
pub fn index_tokens(text: &str, stopwords: &Stopwords) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !stopwords.contains(t, &[])).collect()
}

impl SearchIndex {
    /// Builds from prepared documents; ids must be unique.
    pub fn from_documents(mut docs: Vec<IndexDocument>, stopwords: Stopwords, graph_version: u64) -> Self {
        docs.sort_by(|a, b| a.unit_global_id.cmp(&b.unit_global_id));
        docs.dedup_by(|a, b| a.unit_global_id == b.unit_global_id);
        let n = docs.len() as f64;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut counts: Vec<BTreeMap<String, BTreeMap<Field, usize>>> = Vec::with_capacity(docs.len());
        for doc in &docs {
            let mut tf: BTreeMap<String, BTreeMap<Field, usize>> = BTreeMap::new();
            for (field, tokens) in &doc.field_tokens {
                for t in tokens {
                    *tf.entry(t.clone()).or_default().entry(*field).or_default() += 1;
                }
            }
            for term in tf.keys() {
                *df.entry(term.clone()).or_default() += 1;
            }
            counts.push(tf);
        }
        let mut postings: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut vectors = Vec::with_capacity(docs.len());
        let mut norms = Vec::with_capacity(docs.len());
        for (i, tf) in counts.into_iter().enumerate() {
            let mut vector = BTreeMap::new();
            for (term, fields) in tf {
                let idf = ((n + 1.0) / (df[&term] as f64 + 1.0)).ln();
                let mut w = 0.0;
                for (field, count) in fields {
                    w += field.weight() * (1.0 + (count as f64).ln()) * idf;
                }
                postings.entry(term.clone()).or_default().push(i);
                vector.insert(term, w);
            }
            norms.push(vector.values().map(|w| w * w).sum::<f64>().sqrt());
            vectors.push(vector);
        }
        Self { graph_version, docs, vectors, norms, df, postings, stopwords }
    }

    /// Indexes every unit node, resolving keyword/person/place references to
    /// their labels in all languages.
    pub fn build(graph: &Graph, vocab: &Vocabulary, stopwords: Stopwords) -> Self {
        let refs = References::new(vocab);
        let docs = graph
            .nodes_of_kind(NodeKind::Unit)
            .filter_map(|node| {
                let unit = unit_from_node(node, true)?;
                let tokens = |text: &str| index_tokens(text, &stopwords);
                let mut doc = IndexDocument::new(&node.id);
                doc.title = unit.title.clone();
                let labels = |items: &[String], resolve: &dyn Fn(&str) -> Option<String>| -> Vec<String> {
                    items
                        .iter()
                        .flat_map(|raw| match resolve(raw) {
                            Some(id) => vocab.reference_labels(&id),
                            None => vec![raw.clone()],
                        })
                        .flat_map(|l| tokens(&l))
                        .collect()
                };
                let mut keywords = labels(&unit.keywords, &|r| refs.concept(r));
                keywords.extend(labels(&unit.departments, &|r| refs.concept(r)));
                let mut names = labels(&unit.persons, &|r| refs.person(r));
                names.extend(labels(&unit.places, &|r| refs.place(r)));
                for (field, toks) in [
                    (Field::Title, tokens(&unit.title)),
                    (Field::Keywords, keywords),
                    (Field::Names, names),
                    (Field::ScopeContent, tokens(&unit.scope_content)),
                ] {
                    if !toks.is_empty() {
                        doc.field_tokens.insert(field, toks);
                    }
                }
                let repo = repository_of(&node.id).unwrap_or_default().to_string();
                if let Some(country) = graph.node(&repo).and_then(|r| r.text("country")) {
                    doc.facets.insert(Facet::Country, vec![country.to_string()]);
                }
                doc.facets.insert(Facet::Repository, vec![repo]);
                doc.facets.insert(Facet::Level, vec![unit.level.to_string()]);
                if !unit.language_of_material.is_empty() {
                    doc.facets.insert(Facet::LanguageOfMaterial, unit.language_of_material.clone());
                }
                if let Some(year) = unit.dates_of_creation.iter().map(|d| d.earliest().year()).min() {
                    doc.facets.insert(Facet::DateBucket, vec![decade(year)]);
                }
                doc.copies = graph.neighbor_ids(&node.id, EdgeLabel::CopyOf, Direction::Both).map(|c| c.len()).unwrap_or(0);
                Some(doc)
            })
            .collect();
        Self::from_documents(docs, stopwords, graph.version())
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            graph_version: self.graph_version,
            documents: self.docs.len(),
            terms: self.df.len(),
            postings: self.postings.values().map(Vec::len).sum(),
        }
    }

    pub fn document(&self, id: &str) -> Option<&IndexDocument> {
        self.position(id).map(|i| &self.docs[i])
    }

    pub fn documents(&self) -> &[IndexDocument] {
        &self.docs
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn contains_term(&self, id: &str, term: &str) -> bool {
        self.position(id).is_some_and(|i| self.vectors[i].contains_key(term))
    }

    /// Weighted vector of a document.
    pub fn vector(&self, id: &str) -> Option<&BTreeMap<String, f64>> {
        self.position(id).map(|i| &self.vectors[i])
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    fn position(&self, id: &str) -> Option<usize> {
        self.docs.binary_search_by(|d| d.unit_global_id.as_str().cmp(id)).ok()
    }

    pub fn idf(&self, term: &str) -> f64 {
        ((self.docs.len() as f64 + 1.0) / (self.document_frequency(term) as f64 + 1.0)).ln()
    }

    /// Cosine between the binary idf-weighted query and a document.
    pub fn score(&self, id: &str, terms: &BTreeSet<String>) -> f64 {
        self.position(id).map_or(0.0, |i| self.score_at(i, terms))
    }

    fn score_at(&self, i: usize, terms: &BTreeSet<String>) -> f64 {
        let mut dot = 0.0;
        let mut q_norm = 0.0;
        for t in terms {
            let q = self.idf(t);
            q_norm += q * q;
            if let Some(d) = self.vectors[i].get(t) {
                dot += q * d;
            }
        }
        let denom = q_norm.sqrt() * self.norms[i];
        if denom == 0.0 {
            0.0
        } else {
            dot / denom
        }
    }

    /// Terms fed to expansion: each non-stopword token, plus runs of
    /// adjacent tokens that name a concept (so "transport lists" matches
    /// a two-word label).
    pub fn query_terms(&self, text: &str, thesaurus: &Thesaurus) -> Vec<String> {
        let tokens = tokenize(text);
        let mut terms: Vec<String> = Vec::new();
        for t in &tokens {
            if !self.stopwords.contains(t, &[]) && !terms.contains(t) {
                terms.push(t.clone());
            }
        }
        let whole = normalize(text);
        for n in 2..=tokens.len().min(6) {
            for window in tokens.windows(n) {
                let phrase = window.join(" ");
                if !terms.contains(&phrase) && !thesaurus.lookup(&phrase, None).is_empty() {
                    terms.push(phrase);
                }
            }
        }
        if !whole.is_empty() && !terms.contains(&whole) && !thesaurus.lookup(&whole, None).is_empty() {
            terms.push(whole);
        }
        terms
    }

    pub fn search(
        &self,
        thesaurus: &Thesaurus,
        query: &str,
        languages: &[String],
        filters: &Filters,
        page: usize,
        page_size: usize,
    ) -> Result<SearchResult, SearchError> {
        let constraints: Vec<(Facet, &String)> =
            filters.iter().map(|(k, v)| Ok((k.parse::<Facet>()?, v))).collect::<Result<_, SearchError>>()?;
        if page == 0 {
            return Err(SearchError::InvalidPage("pages start at 1".into()));
        }
        if page_size == 0 || page_size > MAX_PAGE_SIZE {
            return Err(SearchError::InvalidPage(format!("page size must be in 1..={MAX_PAGE_SIZE}")));
        }
        let expansion = thesaurus.expand_query(&self.query_terms(query, thesaurus), languages, None);
        let terms: BTreeSet<String> = expansion
            .expanded_terms
            .iter()
            .flat_map(|t| index_tokens(t, &self.stopwords))
            .collect();

        let mut candidates: BTreeSet<usize> = BTreeSet::new();
        for t in &terms {
            if let Some(p) = self.postings.get(t) {
                candidates.extend(p);
            }
        }
        candidates.retain(|&i| constraints.iter().all(|(f, v)| self.docs[i].facet_values(*f).contains(v)));

        let mut facet_counts: BTreeMap<Facet, BTreeMap<String, usize>> = BTreeMap::new();
        let mut scored: Vec<(f64, usize)> = Vec::with_capacity(candidates.len());
        for &i in &candidates {
            for (facet, values) in &self.docs[i].facets {
                for v in values {
                    *facet_counts.entry(*facet).or_default().entry(v.clone()).or_default() += 1;
                }
            }
            scored.push((self.score_at(i, &terms), i));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| self.docs[a.1].unit_global_id.cmp(&self.docs[b.1].unit_global_id)));

        let total_hits = scored.len();
        let hits = scored
            .into_iter()
            .skip((page - 1).saturating_mul(page_size))
            .take(page_size)
            .map(|(score, i)| {
                let doc = &self.docs[i];
                Hit {
                    unit_global_id: doc.unit_global_id.clone(),
                    score,
                    matched_terms: terms.iter().filter(|t| self.vectors[i].contains_key(*t)).cloned().collect(),
                    title: doc.title.clone(),
                    copies: doc.copies,
                }
            })
            .collect();
        Ok(SearchResult { hits, facet_counts, total_hits, page, page_size, applied_expansion: expansion })
    }
}
