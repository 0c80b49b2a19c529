//! User annotations with moderation. Accepted links and notes are promoted
//! onto the target unit under `promoted*` / `annotationNotes`, each entry
//! traceable to `annotation:<id>`.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::records::{push_unique, ANNOTATION_NOTES, PROMOTED_KEYWORDS, PROMOTED_PERSONS, PROMOTED_PLACES, PROMOTED_PROVENANCE};
use crate::registry::{Direction, EdgeLabel, Graph, Node, NodeKind, Properties, RegistryError, Value};
use crate::text::normalize;

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("link target `{0}` does not exist or has the wrong kind")]
    UnknownLinkTarget(String),
    #[error("unknown annotation `{0}`")]
    UnknownAnnotation(String),
    #[error("annotation `{0}` is already {1}")]
    AlreadyModerated(String, State),
    #[error("invalid annotation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl AnnotationError {
    pub fn code(&self) -> &'static str {
        match self {
            AnnotationError::UnknownTarget(_) => "unknown-target",
            AnnotationError::UnknownLinkTarget(_) => "unknown-link-target",
            AnnotationError::UnknownAnnotation(_) => "unknown-annotation",
            AnnotationError::AlreadyModerated(..) => "already-moderated",
            AnnotationError::Invalid(_) => "invalid-annotation",
            AnnotationError::Registry(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Body {
    TextualNote { text: String },
    ConceptLink { concept_id: String },
    AuthorityLink { authority_id: String },
    CollectionLink { unit_global_id: String },
    PublicationLink { citation: String, url: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum State {
    Proposed,
    Accepted,
    Rejected,
}

impl State {
    pub fn as_str(self) -> &'static str {
        match self {
            State::Proposed => "proposed",
            State::Accepted => "accepted",
            State::Rejected => "rejected",
        }
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for State {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(State::Proposed),
            "accepted" => Ok(State::Accepted),
            "rejected" => Ok(State::Rejected),
            _ => Err(format!("unknown state `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Annotation {
    pub annotation_id: String,
    pub target_id: String,
    pub body: Body,
    pub author: String,
    pub created: String,
    pub seq: u64,
    pub state: State,
    #[serde(default)]
    pub moderator: Option<String>,
    #[serde(default)]
    pub moderator_note: Option<String>,
}

impl Annotation {
    fn to_properties(&self) -> Properties {
        let mut p = Properties::new();
        p.insert("target".into(), Value::text(&self.target_id));
        p.insert("body".into(), Value::text(serde_json::to_string(&self.body).expect("body serializes")));
        p.insert("author".into(), Value::text(&self.author));
        p.insert("created".into(), Value::text(&self.created));
        p.insert("seq".into(), Value::from(self.seq as i64));
        p.insert("state".into(), Value::text(self.state.as_str()));
        if let Some(m) = &self.moderator {
            p.insert("moderator".into(), Value::text(m));
        }
        if let Some(n) = &self.moderator_note {
            p.insert("moderatorNote".into(), Value::text(n));
        }
        p
    }

    pub fn from_node(node: &Node) -> Option<Self> {
        if node.kind != NodeKind::Annotation {
            return None;
        }
        Some(Self {
            annotation_id: node.id.clone(),
            target_id: node.text("target")?.to_string(),
            body: serde_json::from_str(node.text("body")?).ok()?,
            author: node.text("author").unwrap_or_default().to_string(),
            created: node.text("created").unwrap_or_default().to_string(),
            seq: node.properties.get("seq").and_then(Value::as_i64).unwrap_or(0) as u64,
            state: node.text("state")?.parse().ok()?,
            moderator: node.text("moderator").map(str::to_string),
            moderator_note: node.text("moderatorNote").map(str::to_string),
        })
    }

    pub fn provenance(&self) -> String {
        format!("annotation:{}", self.annotation_id)
    }
}

/// Stable publication node id for a citation.
pub fn publication_id(citation: &str) -> String {
    let digest = Sha256::digest(normalize(citation).as_bytes());
    format!("pub-{}", &hex::encode(digest)[..12])
}

fn next_seq(graph: &Graph) -> u64 {
    graph
        .nodes_of_kind(NodeKind::Annotation)
        .filter_map(|n| n.properties.get("seq").and_then(Value::as_i64))
        .max()
        .unwrap_or(0) as u64
        + 1
}

fn check_link(graph: &Graph, id: &str, kinds: &[NodeKind]) -> Result<(), AnnotationError> {
    match graph.node(id) {
        Some(n) if kinds.contains(&n.kind) => Ok(()),
        _ => Err(AnnotationError::UnknownLinkTarget(id.to_string())),
    }
}

pub fn create_annotation(
    graph: &mut Graph,
    target_id: &str,
    body: Body,
    author: &str,
    now: DateTime<Utc>,
) -> Result<Annotation, AnnotationError> {
    if !graph.contains(target_id) {
        return Err(AnnotationError::UnknownTarget(target_id.to_string()));
    }
    if author.trim().is_empty() {
        return Err(AnnotationError::Invalid("author is empty".into()));
    }
    match &body {
        Body::TextualNote { text } if text.trim().is_empty() => return Err(AnnotationError::Invalid("note is empty".into())),
        Body::PublicationLink { citation, .. } if citation.trim().is_empty() => {
            return Err(AnnotationError::Invalid("citation is empty".into()))
        }
        Body::ConceptLink { concept_id } => check_link(graph, concept_id, &[NodeKind::Concept])?,
        Body::AuthorityLink { authority_id } => check_link(
            graph,
            authority_id,
            &[NodeKind::AuthorityPerson, NodeKind::AuthorityPlace, NodeKind::AuthorityCorporate],
        )?,
        Body::CollectionLink { unit_global_id } => check_link(graph, unit_global_id, &[NodeKind::Unit])?,
        _ => {}
    }
    let seq = next_seq(graph);
    let annotation = Annotation {
        annotation_id: format!("ann-{seq:06}"),
        target_id: target_id.to_string(),
        body,
        author: author.to_string(),
        created: now.to_rfc3339_opts(SecondsFormat::Millis, true),
        seq,
        state: State::Proposed,
        moderator: None,
        moderator_note: None,
    };
    graph.upsert_node(NodeKind::Annotation, &annotation.annotation_id, annotation.to_properties())?;
    graph.add_edge(&annotation.annotation_id, EdgeLabel::Annotates, target_id, Properties::new())?;
    if let Body::PublicationLink { citation, url } = &annotation.body {
        let pid = publication_id(citation);
        let mut props = Properties::from([("citation".to_string(), Value::text(citation))]);
        if let Some(u) = url {
            props.insert("url".into(), Value::text(u));
        }
        graph.upsert_node(NodeKind::Publication, &pid, props)?;
        let edge = Properties::from([("source".to_string(), Value::text(annotation.provenance()))]);
        graph.add_edge(target_id, EdgeLabel::CitedBy, &pid, edge)?;
    }
    Ok(annotation)
}

pub fn get_annotation(graph: &Graph, id: &str) -> Result<Annotation, AnnotationError> {
    graph.node(id).and_then(Annotation::from_node).ok_or_else(|| AnnotationError::UnknownAnnotation(id.to_string()))
}

pub fn moderate(
    graph: &mut Graph,
    annotation_id: &str,
    decision: Decision,
    moderator: &str,
    note: Option<&str>,
) -> Result<Annotation, AnnotationError> {
    let mut annotation = get_annotation(graph, annotation_id)?;
    if annotation.state != State::Proposed {
        return Err(AnnotationError::AlreadyModerated(annotation.annotation_id, annotation.state));
    }
    annotation.moderator = Some(moderator.to_string());
    annotation.moderator_note = note.map(str::to_string);
    match decision {
        Decision::Accept => {
            annotation.state = State::Accepted;
            materialize(graph, &annotation)?;
        }
        Decision::Reject => {
            annotation.state = State::Rejected;
            if let Body::PublicationLink { citation, .. } = &annotation.body {
                let pid = publication_id(citation);
                let ours = graph
                    .edge(&annotation.target_id, EdgeLabel::CitedBy, &pid)
                    .and_then(|p| p.get("source"))
                    .and_then(Value::as_text)
                    == Some(annotation.provenance().as_str());
                if ours {
                    graph.remove_edge(&annotation.target_id, EdgeLabel::CitedBy, &pid);
                }
            }
        }
    }
    graph.put_node(NodeKind::Annotation, annotation_id, annotation.to_properties())?;
    Ok(annotation)
}

fn materialize(graph: &mut Graph, a: &Annotation) -> Result<(), AnnotationError> {
    let Some(target) = graph.node(&a.target_id) else {
        return Err(AnnotationError::UnknownTarget(a.target_id.clone()));
    };
    if target.kind != NodeKind::Unit {
        return Ok(());
    }
    let provenance = a.provenance();
    let mut props = target.properties.clone();
    let edge_props = Properties::from([("source".to_string(), Value::text(&provenance))]);
    let link = |graph: &mut Graph, list: &str, label: Option<EdgeLabel>, id: &str, props: &mut Properties| {
        push_unique(props, list, id);
        push_unique(props, PROMOTED_PROVENANCE, &format!("{id} {provenance}"));
        match label {
            Some(l) if !graph.linked(&a.target_id, l, id) => graph.add_edge(&a.target_id, l, id, edge_props.clone()).map(|_| ()),
            _ => Ok(()),
        }
    };
    match &a.body {
        Body::ConceptLink { concept_id } => link(graph, PROMOTED_KEYWORDS, Some(EdgeLabel::Subject), concept_id, &mut props)?,
        Body::AuthorityLink { authority_id } => {
            let kind = graph.node(authority_id).map(|n| n.kind);
            match kind {
                Some(NodeKind::AuthorityPlace) => {
                    link(graph, PROMOTED_PLACES, Some(EdgeLabel::AboutPlace), authority_id, &mut props)?
                }
                Some(NodeKind::AuthorityPerson) => {
                    link(graph, PROMOTED_PERSONS, Some(EdgeLabel::AboutPerson), authority_id, &mut props)?
                }
                Some(_) => link(graph, PROMOTED_PERSONS, None, authority_id, &mut props)?,
                None => return Err(AnnotationError::UnknownLinkTarget(authority_id.clone())),
            }
        }
        Body::TextualNote { text } => {
            push_unique(&mut props, ANNOTATION_NOTES, &format!("{text} ({}, {provenance})", a.author));
        }
        Body::CollectionLink { .. } | Body::PublicationLink { .. } => {}
    }
    graph.put_node(NodeKind::Unit, &a.target_id, props)?;
    Ok(())
}

/// Annotations on `target_id` in creation order, optionally by state.
pub fn list_annotations(graph: &Graph, target_id: &str, state: Option<State>) -> Result<Vec<Annotation>, AnnotationError> {
    if !graph.contains(target_id) {
        return Err(AnnotationError::UnknownTarget(target_id.to_string()));
    }
    let mut out: Vec<Annotation> = graph
        .neighbors(target_id, EdgeLabel::Annotates, Direction::In)?
        .into_iter()
        .filter_map(Annotation::from_node)
        .filter(|a| state.is_none_or(|s| a.state == s))
        .collect();
    out.sort_by(|a, b| a.created.cmp(&b.created).then(a.seq.cmp(&b.seq)));
    Ok(out)
}
