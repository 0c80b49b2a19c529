//! Property-graph registry.
//!
//! Nodes carry a kind and a flat property map (scalars or lists of scalars);
//! edges are typed by [`EdgeLabel`]. `partOf` edges form a forest: every node
//! has at most one outgoing `partOf` and cycles are refused at insert time.
//!
//! [`Registry`] wraps a graph for single-writer, multi-reader use: readers
//! hold an immutable `Arc<Graph>` version; writers apply a batch to a private
//! copy and publish it atomically, so a failed batch is never visible.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

pub const SNAPSHOT_HEADER: &str = "nexus-graph v1";

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node id must not be empty")]
    EmptyId,
    #[error("node id `{0:?}` contains a tab or line break")]
    InvalidId(String),
    #[error("node `{id}` already exists as {existing}, cannot use it as {requested}")]
    KindConflict { id: String, existing: NodeKind, requested: NodeKind },
    #[error("edge endpoint `{0}` does not exist")]
    MissingEndpoint(String),
    #[error("`{src}` already has parent `{existing}`")]
    PartOfSecondParent { src: String, existing: String },
    #[error("partOf edge {src} -> {dst} would close a cycle")]
    PartOfCycle { src: String, dst: String },
    #[error("invalid property `{0}`: non-finite number")]
    InvalidProperty(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("malformed snapshot at line {line}: {reason}")]
    MalformedSnapshot { line: usize, reason: String },
}

impl RegistryError {
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::UnknownNode(_) => "unknown-id",
            RegistryError::EmptyId | RegistryError::InvalidId(_) => "invalid-id",
            RegistryError::KindConflict { .. } => "kind-conflict",
            RegistryError::MissingEndpoint(_) => "missing-endpoint",
            RegistryError::PartOfSecondParent { .. } => "partOf-second-parent",
            RegistryError::PartOfCycle { .. } => "partOf-cycle",
            RegistryError::InvalidProperty(_) => "invalid-property",
            RegistryError::Io(_) => "io-failure",
            RegistryError::MalformedSnapshot { .. } => "malformed-snapshot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Unit,
    Repository,
    Concept,
    AuthorityPerson,
    AuthorityPlace,
    AuthorityCorporate,
    Annotation,
    GuideEntity,
    Event,
    Publication,
}

impl NodeKind {
    pub const ALL: [NodeKind; 10] = [
        NodeKind::Unit,
        NodeKind::Repository,
        NodeKind::Concept,
        NodeKind::AuthorityPerson,
        NodeKind::AuthorityPlace,
        NodeKind::AuthorityCorporate,
        NodeKind::Annotation,
        NodeKind::GuideEntity,
        NodeKind::Event,
        NodeKind::Publication,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Unit => "unit",
            NodeKind::Repository => "repository",
            NodeKind::Concept => "concept",
            NodeKind::AuthorityPerson => "authority-person",
            NodeKind::AuthorityPlace => "authority-place",
            NodeKind::AuthorityCorporate => "authority-corporate",
            NodeKind::Annotation => "annotation",
            NodeKind::GuideEntity => "guide-entity",
            NodeKind::Event => "event",
            NodeKind::Publication => "publication",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown node kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EdgeLabel {
    PartOf,
    HeldBy,
    DescribedBy,
    Subject,
    AboutPerson,
    AboutPlace,
    CopyOf,
    SameAs,
    Annotates,
    CitedBy,
    LocatedAt,
    MemberOfDepartment,
    Narrower,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 13] = [
        EdgeLabel::PartOf,
        EdgeLabel::HeldBy,
        EdgeLabel::DescribedBy,
        EdgeLabel::Subject,
        EdgeLabel::AboutPerson,
        EdgeLabel::AboutPlace,
        EdgeLabel::CopyOf,
        EdgeLabel::SameAs,
        EdgeLabel::Annotates,
        EdgeLabel::CitedBy,
        EdgeLabel::LocatedAt,
        EdgeLabel::MemberOfDepartment,
        EdgeLabel::Narrower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::PartOf => "partOf",
            EdgeLabel::HeldBy => "heldBy",
            EdgeLabel::DescribedBy => "describedBy",
            EdgeLabel::Subject => "subject",
            EdgeLabel::AboutPerson => "aboutPerson",
            EdgeLabel::AboutPlace => "aboutPlace",
            EdgeLabel::CopyOf => "copyOf",
            EdgeLabel::SameAs => "sameAs",
            EdgeLabel::Annotates => "annotates",
            EdgeLabel::CitedBy => "citedBy",
            EdgeLabel::LocatedAt => "locatedAt",
            EdgeLabel::MemberOfDepartment => "memberOfDepartment",
            EdgeLabel::Narrower => "narrower",
        }
    }

    /// Labels stored once but traversed in both directions.
    pub fn is_symmetric(self) -> bool {
        matches!(self, EdgeLabel::SameAs | EdgeLabel::CopyOf)
    }
}

impl Ord for EdgeLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_str().cmp(other.as_str())
    }
}

impl PartialOrd for EdgeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown edge label `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Scalar {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(Scalar),
    List(Vec<Scalar>),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Scalar(Scalar::Text(s.into()))
    }

    pub fn texts<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::List(items.into_iter().map(|s| Scalar::Text(s.into())).collect())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Scalar(s) => s.as_text(),
            Value::List(_) => None,
        }
    }

    /// Text items of a list; a single text scalar counts as a one-item list.
    pub fn as_texts(&self) -> Vec<String> {
        match self {
            Value::Scalar(Scalar::Text(s)) => vec![s.clone()],
            Value::Scalar(_) => Vec::new(),
            Value::List(items) => items.iter().filter_map(|s| s.as_text().map(str::to_string)).collect(),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Scalar(Scalar::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Scalar(Scalar::Float(f)) => Some(*f),
            Value::Scalar(Scalar::Int(i)) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Scalar(Scalar::Int(i)) => Some(*i),
            _ => None,
        }
    }

    fn is_finite(&self) -> bool {
        let finite = |s: &Scalar| !matches!(s, Scalar::Float(f) if !f.is_finite());
        match self {
            Value::Scalar(s) => finite(s),
            Value::List(items) => items.iter().all(finite),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::text(s)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::text(s)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Scalar(Scalar::Bool(b))
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Scalar(Scalar::Int(i))
    }
}

impl From<f64> for Value {
    fn from(f: f64) -> Self {
        Value::Scalar(Scalar::Float(f))
    }
}

pub type Properties = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub properties: Properties,
}

impl Node {
    pub fn text(&self, key: &str) -> Option<&str> {
        self.properties.get(key).and_then(Value::as_text)
    }

    pub fn texts(&self, key: &str) -> Vec<String> {
        self.properties.get(key).map(Value::as_texts).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub src: String,
    pub label: EdgeLabel,
    pub dst: String,
}

impl EdgeKey {
    pub fn new(src: impl Into<String>, label: EdgeLabel, dst: impl Into<String>) -> Self {
        Self { src: src.into(), label, dst: dst.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Out,
    In,
    Both,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            "both" => Ok(Direction::Both),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsert {
    Created,
    Updated,
    Unchanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeInsert {
    Added,
    Existing,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<EdgeKey, Properties>,
    outgoing: BTreeMap<String, BTreeSet<(EdgeLabel, String)>>,
    incoming: BTreeMap<String, BTreeSet<(EdgeLabel, String)>>,
    version: u64,
}

/// Structural equality: same nodes, kinds, labels and properties. The
/// publication counter is not part of a graph's content.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Publication counter; bumped by [`Registry::write`].
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeKey, &Properties)> {
        self.edges.iter()
    }

    pub fn edge(&self, src: &str, label: EdgeLabel, dst: &str) -> Option<&Properties> {
        self.edges.get(&EdgeKey::new(src, label, dst))
    }

    /// True when an edge joins the two nodes, honouring symmetric labels.
    pub fn linked(&self, a: &str, label: EdgeLabel, b: &str) -> bool {
        self.edge(a, label, b).is_some() || (label.is_symmetric() && self.edge(b, label, a).is_some())
    }

    pub fn upsert_node(&mut self, kind: NodeKind, id: &str, properties: Properties) -> Result<Upsert, RegistryError> {
        if id.is_empty() {
            return Err(RegistryError::EmptyId);
        }
        if id.contains(['\t', '\n', '\r']) {
            return Err(RegistryError::InvalidId(id.to_string()));
        }
        if let Some((key, _)) = properties.iter().find(|(_, v)| !v.is_finite()) {
            return Err(RegistryError::InvalidProperty(key.clone()));
        }
        match self.nodes.get_mut(id) {
            Some(node) if node.kind != kind => Err(RegistryError::KindConflict {
                id: id.to_string(),
                existing: node.kind,
                requested: kind,
            }),
            Some(node) => {
                let mut changed = false;
                for (key, value) in properties {
                    if node.properties.get(&key) != Some(&value) {
                        node.properties.insert(key, value);
                        changed = true;
                    }
                }
                Ok(if changed { Upsert::Updated } else { Upsert::Unchanged })
            }
            None => {
                self.nodes.insert(id.to_string(), Node { id: id.to_string(), kind, properties });
                Ok(Upsert::Created)
            }
        }
    }

    /// Creates the node or replaces its whole property map.
    pub fn put_node(&mut self, kind: NodeKind, id: &str, properties: Properties) -> Result<Upsert, RegistryError> {
        let stale: Vec<String> = match self.nodes.get(id) {
            Some(node) if node.kind == kind => {
                node.properties.keys().filter(|k| !properties.contains_key(*k)).cloned().collect()
            }
            _ => Vec::new(),
        };
        let outcome = self.upsert_node(kind, id, properties)?;
        let node = self.nodes.get_mut(id).expect("upserted");
        for key in &stale {
            node.properties.remove(key);
        }
        Ok(if stale.is_empty() { outcome } else { Upsert::Updated })
    }

    pub fn remove_property(&mut self, id: &str, key: &str) -> Result<Option<Value>, RegistryError> {
        let node = self.nodes.get_mut(id).ok_or_else(|| RegistryError::UnknownNode(id.to_string()))?;
        Ok(node.properties.remove(key))
    }

    pub fn add_edge(
        &mut self,
        src: &str,
        label: EdgeLabel,
        dst: &str,
        properties: Properties,
    ) -> Result<EdgeInsert, RegistryError> {
        for end in [src, dst] {
            if !self.nodes.contains_key(end) {
                return Err(RegistryError::MissingEndpoint(end.to_string()));
            }
        }
        let key = EdgeKey::new(src, label, dst);
        if self.edges.contains_key(&key) {
            return Ok(EdgeInsert::Existing);
        }
        if label == EdgeLabel::PartOf {
            if src == dst || self.is_ancestor(src, dst) {
                return Err(RegistryError::PartOfCycle { src: src.to_string(), dst: dst.to_string() });
            }
            if let Some(existing) = self.parent(src, EdgeLabel::PartOf) {
                return Err(RegistryError::PartOfSecondParent {
                    src: src.to_string(),
                    existing: existing.to_string(),
                });
            }
        }
        if let Some((k, _)) = properties.iter().find(|(_, v)| !v.is_finite()) {
            return Err(RegistryError::InvalidProperty(k.clone()));
        }
        self.outgoing.entry(src.to_string()).or_default().insert((label, dst.to_string()));
        self.incoming.entry(dst.to_string()).or_default().insert((label, src.to_string()));
        self.edges.insert(key, properties);
        Ok(EdgeInsert::Added)
    }

    pub fn remove_edge(&mut self, src: &str, label: EdgeLabel, dst: &str) -> bool {
        if self.edges.remove(&EdgeKey::new(src, label, dst)).is_none() {
            return false;
        }
        if let Some(set) = self.outgoing.get_mut(src) {
            set.remove(&(label, dst.to_string()));
        }
        if let Some(set) = self.incoming.get_mut(dst) {
            set.remove(&(label, src.to_string()));
        }
        true
    }

    /// Walks `partOf` parents from `start`; true if `candidate` is met.
    fn is_ancestor(&self, candidate: &str, start: &str) -> bool {
        let mut current = Some(start);
        while let Some(id) = current {
            if id == candidate {
                return true;
            }
            current = self.parent(id, EdgeLabel::PartOf);
        }
        false
    }

    /// First outgoing neighbour via `label` (the parent for `partOf`).
    pub fn parent(&self, id: &str, label: EdgeLabel) -> Option<&str> {
        self.outgoing
            .get(id)?
            .range((label, String::new())..)
            .take_while(|(l, _)| *l == label)
            .map(|(_, dst)| dst.as_str())
            .next()
    }

    fn adjacent_ids(&self, id: &str, label: EdgeLabel, direction: Direction) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        let (fwd, back) = match direction {
            Direction::Out => (true, label.is_symmetric()),
            Direction::In => (label.is_symmetric(), true),
            Direction::Both => (true, true),
        };
        if fwd {
            if let Some(set) = self.outgoing.get(id) {
                out.extend(
                    set.range((label, String::new())..).take_while(|(l, _)| *l == label).map(|(_, n)| n.as_str()),
                );
            }
        }
        if back {
            if let Some(set) = self.incoming.get(id) {
                out.extend(
                    set.range((label, String::new())..).take_while(|(l, _)| *l == label).map(|(_, n)| n.as_str()),
                );
            }
        }
        out
    }

    /// Neighbour ids in ascending order. Symmetric labels ignore direction.
    pub fn neighbor_ids(&self, id: &str, label: EdgeLabel, direction: Direction) -> Result<Vec<String>, RegistryError> {
        if !self.nodes.contains_key(id) {
            return Err(RegistryError::UnknownNode(id.to_string()));
        }
        Ok(self.adjacent_ids(id, label, direction).into_iter().map(str::to_string).collect())
    }

    pub fn neighbors(&self, id: &str, label: EdgeLabel, direction: Direction) -> Result<Vec<&Node>, RegistryError> {
        if !self.nodes.contains_key(id) {
            return Err(RegistryError::UnknownNode(id.to_string()));
        }
        Ok(self.adjacent_ids(id, label, direction).into_iter().filter_map(|n| self.nodes.get(n)).collect())
    }

    /// Breadth-first transitive closure, excluding the start node.
    pub fn closure(
        &self,
        id: &str,
        label: EdgeLabel,
        direction: Direction,
        max_depth: Option<usize>,
    ) -> Result<BTreeSet<String>, RegistryError> {
        if !self.nodes.contains_key(id) {
            return Err(RegistryError::UnknownNode(id.to_string()));
        }
        let mut seen: BTreeSet<&str> = BTreeSet::from([id]);
        let mut queue = VecDeque::from([(id, 0usize)]);
        let mut out = BTreeSet::new();
        while let Some((current, depth)) = queue.pop_front() {
            if max_depth.is_some_and(|m| depth >= m) {
                continue;
            }
            for next in self.adjacent_ids(current, label, direction) {
                if seen.insert(next) {
                    out.insert(next.to_string());
                    queue.push_back((next, depth + 1));
                }
            }
        }
        Ok(out)
    }

    /// Full-scan consistency check; returns a description of every violation.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for key in self.edges.keys() {
            for end in [&key.src, &key.dst] {
                if !self.nodes.contains_key(end) {
                    problems.push(format!("dangling edge {} {} {}", key.src, key.label, key.dst));
                }
            }
            if key.label == EdgeLabel::PartOf {
                parents.entry(&key.src).or_default().push(&key.dst);
            }
        }
        for (child, ps) in &parents {
            if ps.len() > 1 {
                problems.push(format!("`{child}` has {} partOf parents", ps.len()));
            }
        }
        for start in parents.keys() {
            let mut seen = BTreeSet::from([*start]);
            let mut current = *start;
            while let Some(next) = parents.get(current).and_then(|p| p.first()) {
                if !seen.insert(next) {
                    problems.push(format!("partOf cycle through `{start}`"));
                    break;
                }
                current = next;
            }
        }
        problems
    }

    fn encode_props(props: &Properties) -> String {
        serde_json::to_string(props).expect("property maps always serialize")
    }

    /// Canonical snapshot text: header, nodes by id, then edges by (src, label, dst).
    pub fn to_snapshot_string(&self) -> String {
        let mut out = String::new();
        self.write_snapshot(&mut out);
        out
    }

    fn write_snapshot(&self, out: &mut String) {
        use std::fmt::Write as _;
        out.push_str(SNAPSHOT_HEADER);
        out.push('\n');
        for node in self.nodes.values() {
            let _ = writeln!(out, "N\t{}\t{}\t{}", node.kind, node.id, Self::encode_props(&node.properties));
        }
        for (key, props) in &self.edges {
            let _ = writeln!(out, "E\t{}\t{}\t{}\t{}", key.src, key.label, key.dst, Self::encode_props(props));
        }
    }

    /// Writes the snapshot atomically (temp file then rename); returns records written.
    pub fn snapshot(&self, path: &Path) -> Result<usize, RegistryError> {
        let mut text = String::new();
        self.write_snapshot(&mut text);
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(self.nodes.len() + self.edges.len())
    }

    pub fn load(path: &Path) -> Result<Graph, RegistryError> {
        let text = fs::read_to_string(path)?;
        Self::from_snapshot_str(&text)
    }

    pub fn from_snapshot_str(text: &str) -> Result<Graph, RegistryError> {
        let malformed = |line: usize, reason: String| RegistryError::MalformedSnapshot { line, reason };
        let mut graph = Graph::new();
        let mut lines = text.split_inclusive('\n').enumerate();
        match lines.next() {
            Some((_, l)) if l.trim_end_matches(['\n', '\r']) == SNAPSHOT_HEADER => {}
            _ => return Err(malformed(1, format!("expected header `{SNAPSHOT_HEADER}`"))),
        }
        let mut seen_edge = false;
        for (idx, raw) in lines {
            let lineno = idx + 1;
            let Some(line) = raw.strip_suffix('\n') else {
                return Err(malformed(lineno, "record is not terminated (truncated file?)".into()));
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let props = |s: &str| -> Result<Properties, RegistryError> {
                serde_json::from_str(s).map_err(|e| malformed(lineno, format!("bad property object: {e}")))
            };
            match fields.as_slice() {
                ["N", kind, id, p] => {
                    if seen_edge {
                        return Err(malformed(lineno, "node record after edge records".into()));
                    }
                    let kind: NodeKind = kind.parse().map_err(|e| malformed(lineno, e))?;
                    if graph.contains(id) {
                        return Err(malformed(lineno, format!("duplicate node `{id}`")));
                    }
                    graph.upsert_node(kind, id, props(p)?).map_err(|e| malformed(lineno, e.to_string()))?;
                }
                ["E", src, label, dst, p] => {
                    seen_edge = true;
                    let label: EdgeLabel = label.parse().map_err(|e| malformed(lineno, e))?;
                    graph.add_edge(src, label, dst, props(p)?).map_err(|e| malformed(lineno, e.to_string()))?;
                }
                _ => return Err(malformed(lineno, format!("expected N or E record, got {} fields", fields.len()))),
            }
        }
        Ok(graph)
    }
}

/// Single-writer, multi-reader holder of published graph versions.
#[derive(Debug, Default)]
pub struct Registry {
    current: RwLock<Arc<Graph>>,
    writer: Mutex<()>,
}

impl Registry {
    pub fn new(graph: Graph) -> Self {
        Self { current: RwLock::new(Arc::new(graph)), writer: Mutex::new(()) }
    }

    /// The currently published version.
    pub fn read(&self) -> Arc<Graph> {
        self.current.read().expect("registry lock poisoned").clone()
    }

    /// Applies `batch` to a private copy and publishes it if the batch succeeds.
    pub fn write<T, E>(&self, batch: impl FnOnce(&mut Graph) -> Result<T, E>) -> Result<T, E> {
        let _guard = self.writer.lock().expect("registry writer poisoned");
        let mut draft = (*self.read()).clone();
        let out = batch(&mut draft)?;
        draft.version += 1;
        *self.current.write().expect("registry lock poisoned") = Arc::new(draft);
        Ok(out)
    }
}
