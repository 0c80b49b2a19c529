//! Brute-force reference implementations for checking the portal in tests.
//!
//! Everything here works on plain strings and maps and shares no code with
//! the crates under test. Inputs are expected to be ASCII, so normalization
//! reduces to lowercasing and whitespace collapse.

use std::collections::{BTreeMap, BTreeSet};

/// Lowercases and collapses whitespace. Valid for ASCII text only.
pub fn fold(text: &str) -> String {
    text.split_whitespace().map(|w| w.to_ascii_lowercase()).collect::<Vec<_>>().join(" ")
}

/// Alphanumeric ASCII tokens, lowercased.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric()).filter(|t| !t.is_empty()).map(|t| t.to_ascii_lowercase()).collect()
}

pub mod expansion {
    use super::*;

    #[derive(Debug, Clone)]
    pub struct Concept {
        pub id: String,
        /// `(language, label)`, preferred and alternative alike.
        pub labels: Vec<(String, String)>,
        pub narrower: Vec<String>,
    }

    /// Concepts reachable from `start` through narrower links, `start`
    /// included, at most `max_depth` links away.
    pub fn reachable(concepts: &BTreeMap<String, Concept>, start: &str, max_depth: Option<usize>) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([start.to_string()]);
        let mut frontier = vec![start.to_string()];
        let mut depth = 0;
        while !frontier.is_empty() && max_depth.is_none_or(|m| depth < m) {
            let mut next = Vec::new();
            for id in &frontier {
                for n in concepts.get(id).map(|c| c.narrower.as_slice()).unwrap_or(&[]) {
                    if seen.insert(n.clone()) {
                        next.push(n.clone());
                    }
                }
            }
            frontier = next;
            depth += 1;
        }
        seen
    }

    /// One round: labels (in `languages`, or all when empty) of every concept
    /// reachable from a concept with a label equal to a term.
    fn round(concepts: &BTreeMap<String, Concept>, terms: &BTreeSet<String>, languages: &[String], max_depth: Option<usize>) -> BTreeSet<String> {
        let mut out = terms.clone();
        for c in concepts.values() {
            if !c.labels.iter().any(|(_, l)| terms.contains(&fold(l))) {
                continue;
            }
            for id in reachable(concepts, &c.id, max_depth) {
                for (lang, label) in &concepts[&id].labels {
                    if languages.is_empty() || languages.contains(lang) {
                        out.insert(fold(label));
                    }
                }
            }
        }
        out
    }

    /// Expanded term set. Unbounded depth iterates rounds to a fixpoint; a
    /// depth bound means a single round.
    pub fn expand(concepts: &BTreeMap<String, Concept>, terms: &[String], languages: &[String], max_depth: Option<usize>) -> BTreeSet<String> {
        let mut current: BTreeSet<String> = terms.iter().map(|t| fold(t)).filter(|t| !t.is_empty()).collect();
        if max_depth.is_some() {
            return round(concepts, &current, languages, max_depth);
        }
        loop {
            let next = round(concepts, &current, languages, None);
            if next == current {
                return current;
            }
            current = next;
        }
    }
}

pub mod ranking {
    use super::*;

    #[derive(Debug, Clone)]
    pub struct Doc {
        pub id: String,
        /// `(field weight, tokens)`; a field may appear once.
        pub fields: Vec<(f64, Vec<String>)>,
    }

    fn contains(doc: &Doc, term: &str) -> bool {
        doc.fields.iter().any(|(_, ts)| ts.iter().any(|t| t == term))
    }

    pub fn idf(docs: &[Doc], term: &str) -> f64 {
        let n = docs.len() as f64;
        let df = docs.iter().filter(|d| contains(d, term)).count() as f64;
        ((n + 1.0) / (df + 1.0)).ln()
    }

    /// Weight of `term` in `doc`: the sum over fields holding it of
    /// field weight × (1 + ln tf) × idf.
    pub fn weight(docs: &[Doc], doc: &Doc, term: &str) -> f64 {
        let idf = idf(docs, term);
        doc.fields
            .iter()
            .map(|(w, ts)| {
                let tf = ts.iter().filter(|t| *t == term).count();
                if tf == 0 {
                    0.0
                } else {
                    w * (1.0 + (tf as f64).ln()) * idf
                }
            })
            .sum()
    }

    /// Cosine between a query weighted by idf alone and the document.
    pub fn score(docs: &[Doc], doc: &Doc, query: &BTreeSet<String>) -> f64 {
        let vocabulary: BTreeSet<&String> = doc.fields.iter().flat_map(|(_, ts)| ts).collect();
        let doc_norm = vocabulary.iter().map(|t| weight(docs, doc, t).powi(2)).sum::<f64>().sqrt();
        let q_norm = query.iter().map(|t| idf(docs, t).powi(2)).sum::<f64>().sqrt();
        let dot: f64 = query.iter().map(|t| idf(docs, t) * weight(docs, doc, t)).sum();
        if doc_norm == 0.0 || q_norm == 0.0 {
            0.0
        } else {
            dot / (doc_norm * q_norm)
        }
    }

    /// Documents holding at least one query term, by score descending then
    /// id ascending.
    pub fn rank(docs: &[Doc], query: &BTreeSet<String>) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = docs
            .iter()
            .filter(|d| query.iter().any(|t| contains(d, t)))
            .map(|d| (d.id.clone(), score(docs, d, query)))
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores").then_with(|| a.0.cmp(&b.0)));
        out
    }
}

pub mod graph {
    use super::*;

    /// `(src, label, dst)`
    pub type Edge = (String, String, String);

    /// Every violation of: endpoints exist, at most one outgoing `partOf`
    /// per node, `partOf` acyclic (depth-first search with colouring).
    pub fn violations(nodes: &BTreeSet<String>, edges: &[Edge]) -> Vec<String> {
        let mut out = Vec::new();
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut out_degree: BTreeMap<&str, usize> = BTreeMap::new();
        for (src, label, dst) in edges {
            if !nodes.contains(src) || !nodes.contains(dst) {
                out.push(format!("dangling {src} {label} {dst}"));
            }
            if label == "partOf" {
                *out_degree.entry(src).or_default() += 1;
                children.entry(src).or_default().push(dst);
            }
        }
        out.extend(out_degree.iter().filter(|(_, d)| **d > 1).map(|(n, d)| format!("{n} has {d} parents")));
        // 0 unvisited, 1 on stack, 2 finished
        let mut colour: BTreeMap<&str, u8> = BTreeMap::new();
        fn dfs<'a>(n: &'a str, adj: &BTreeMap<&'a str, Vec<&'a str>>, colour: &mut BTreeMap<&'a str, u8>) -> bool {
            colour.insert(n, 1);
            for m in adj.get(n).map(Vec::as_slice).unwrap_or(&[]) {
                match colour.get(m).copied().unwrap_or(0) {
                    1 => return true,
                    0 if dfs(m, adj, colour) => return true,
                    _ => {}
                }
            }
            colour.insert(n, 2);
            false
        }
        for n in children.keys() {
            if colour.get(n).copied().unwrap_or(0) == 0 && dfs(n, &children, &mut colour) {
                out.push(format!("partOf cycle reachable from {n}"));
            }
        }
        out
    }

    /// True when the directed graph has a cycle (repeated removal of nodes
    /// without incoming edges leaves something behind).
    pub fn cyclic(edges: &[(String, String)]) -> bool {
        let mut remaining: Vec<(String, String)> = edges.to_vec();
        loop {
            let targets: BTreeSet<&String> = remaining.iter().map(|(_, d)| d).collect();
            let sources: BTreeSet<String> = remaining.iter().map(|(s, _)| s.clone()).filter(|s| !targets.contains(s)).collect();
            if sources.is_empty() {
                return !remaining.is_empty();
            }
            remaining.retain(|(s, _)| !sources.contains(s));
        }
    }

    /// Breadth-first closure by iterated neighbour expansion, start excluded.
    pub fn closure(edges: &[Edge], start: &str, label: &str, outward: bool, max_depth: Option<usize>) -> BTreeSet<String> {
        let step = |n: &str| -> Vec<String> {
            edges
                .iter()
                .filter(|(s, l, d)| l == label && if outward { s == n } else { d == n })
                .map(|(s, _, d)| if outward { d.clone() } else { s.clone() })
                .collect()
        };
        let mut seen = BTreeSet::new();
        let mut frontier = vec![start.to_string()];
        let mut depth = 0;
        while !frontier.is_empty() && max_depth.is_none_or(|m| depth < m) {
            frontier = frontier.iter().flat_map(|n| step(n)).filter(|n| n != start && seen.insert(n.clone())).collect();
            depth += 1;
        }
        seen
    }
}
