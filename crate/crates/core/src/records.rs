//! Mapping between archival types and registry node properties.
//!
//! Unit nodes hold two groups of properties: the fields delivered by the
//! holding institution (rewritten on every import), and fields promoted from
//! accepted annotations (`promoted*`, `annotationNotes`), which imports never
//! touch.

use crate::archival::{DescriptionStatus, DocumentaryUnit, Level, Repository};
use crate::registry::{Node, Properties, Scalar, Value};

pub const PROMOTED_KEYWORDS: &str = "promotedKeywords";
pub const PROMOTED_PERSONS: &str = "promotedPersons";
pub const PROMOTED_PLACES: &str = "promotedPlaces";
pub const PROMOTED_PROVENANCE: &str = "promotedProvenance";
pub const ANNOTATION_NOTES: &str = "annotationNotes";

/// Property keys owned by the holding institution's data.
pub const UNIT_KEYS: [&str; 16] = [
    "localId",
    "level",
    "title",
    "datesOfCreation",
    "undated",
    "languageOfMaterial",
    "languageOfDescription",
    "scopeContent",
    "extent",
    "keywords",
    "places",
    "persons",
    "departments",
    "parent",
    "provenanceNote",
    "sourceSystem",
];

pub fn unit_properties(unit: &DocumentaryUnit) -> Properties {
    let mut p = Properties::new();
    p.insert("localId".into(), Value::text(&unit.local_id));
    p.insert("level".into(), Value::text(unit.level.as_str()));
    p.insert("title".into(), Value::text(&unit.title));
    p.insert("datesOfCreation".into(), Value::texts(unit.dates_of_creation.iter().map(|d| d.to_string())));
    p.insert("undated".into(), Value::from(unit.undated));
    p.insert("languageOfMaterial".into(), Value::texts(unit.language_of_material.iter().cloned()));
    p.insert("languageOfDescription".into(), Value::text(&unit.language_of_description));
    p.insert("scopeContent".into(), Value::text(&unit.scope_content));
    p.insert("extent".into(), Value::text(&unit.extent));
    p.insert("keywords".into(), Value::texts(unit.keywords.iter().cloned()));
    p.insert("places".into(), Value::texts(unit.places.iter().cloned()));
    p.insert("persons".into(), Value::texts(unit.persons.iter().cloned()));
    p.insert("departments".into(), Value::texts(unit.departments.iter().cloned()));
    p.insert("parent".into(), Value::text(unit.parent.clone().unwrap_or_default()));
    p.insert("provenanceNote".into(), Value::text(&unit.provenance_note));
    p.insert("sourceSystem".into(), Value::text(&unit.source_system));
    p
}

/// The institution-owned subset of a unit node's properties.
pub fn institution_properties(node: &Node) -> Properties {
    node.properties.iter().filter(|(k, _)| UNIT_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect()
}

pub fn has_promoted_content(node: &Node) -> bool {
    [PROMOTED_KEYWORDS, PROMOTED_PERSONS, PROMOTED_PLACES, ANNOTATION_NOTES]
        .iter()
        .any(|k| node.properties.get(*k).is_some_and(|v| !v.as_texts().is_empty()))
}

/// Decodes a unit node. With `with_promoted`, keyword/person/place lists
/// include promoted entries and accepted notes are appended to the
/// provenance note.
pub fn unit_from_node(node: &Node, with_promoted: bool) -> Option<DocumentaryUnit> {
    let text = |k: &str| node.text(k).unwrap_or_default().to_string();
    let level: Level = node.text("level")?.parse().ok()?;
    let mut unit = DocumentaryUnit::new(text("localId"), level, text("title"));
    unit.global_id = node.id.clone();
    unit.dates_of_creation = node.texts("datesOfCreation").iter().filter_map(|d| d.parse().ok()).collect();
    unit.undated = node.properties.get("undated").and_then(Value::as_bool).unwrap_or(false);
    unit.language_of_material = node.texts("languageOfMaterial");
    unit.language_of_description = text("languageOfDescription");
    unit.scope_content = text("scopeContent");
    unit.extent = text("extent");
    unit.keywords = node.texts("keywords");
    unit.places = node.texts("places");
    unit.persons = node.texts("persons");
    unit.departments = node.texts("departments");
    unit.parent = node.text("parent").filter(|p| !p.is_empty()).map(str::to_string);
    unit.provenance_note = text("provenanceNote");
    unit.source_system = text("sourceSystem");
    if with_promoted {
        for (key, list) in [
            (PROMOTED_KEYWORDS, &mut unit.keywords),
            (PROMOTED_PERSONS, &mut unit.persons),
            (PROMOTED_PLACES, &mut unit.places),
        ] {
            for item in node.texts(key) {
                if !list.contains(&item) {
                    list.push(item);
                }
            }
        }
        for note in node.texts(ANNOTATION_NOTES) {
            if !unit.provenance_note.is_empty() {
                unit.provenance_note.push('\n');
            }
            unit.provenance_note.push_str(&note);
        }
    }
    Some(unit)
}

/// Appends `item` to a text-list property unless already present.
pub fn push_unique(props: &mut Properties, key: &str, item: &str) -> bool {
    let mut items = props.get(key).map(Value::as_texts).unwrap_or_default();
    if items.iter().any(|i| i == item) {
        return false;
    }
    items.push(item.to_string());
    props.insert(key.to_string(), Value::List(items.into_iter().map(Scalar::Text).collect()));
    true
}

pub fn repository_properties(repo: &Repository) -> Properties {
    let mut p = Properties::new();
    p.insert("authorizedFormOfName".into(), Value::text(&repo.authorized_form_of_name));
    p.insert("otherNames".into(), Value::texts(repo.other_names.iter().cloned()));
    p.insert("country".into(), Value::text(&repo.country));
    p.insert("address".into(), Value::text(&repo.address));
    p.insert("contact".into(), Value::text(&repo.contact));
    p.insert("descriptionStatus".into(), Value::text(repo.description_status.as_str()));
    p.insert("holdingsSummary".into(), Value::text(&repo.holdings_summary));
    p.insert("harvestEndpoint".into(), Value::text(repo.harvest_endpoint.clone().unwrap_or_default()));
    p.insert("harvestCapable".into(), Value::from(repo.harvest_capable));
    p
}

pub fn repository_from_node(node: &Node) -> Repository {
    let text = |k: &str| node.text(k).unwrap_or_default().to_string();
    Repository {
        ehri_id: node.id.clone(),
        authorized_form_of_name: text("authorizedFormOfName"),
        other_names: node.texts("otherNames"),
        country: text("country"),
        address: text("address"),
        contact: text("contact"),
        description_status: if node.text("descriptionStatus") == Some("published") {
            DescriptionStatus::Published
        } else {
            DescriptionStatus::Draft
        },
        holdings_summary: text("holdingsSummary"),
        harvest_endpoint: node.text("harvestEndpoint").filter(|s| !s.is_empty()).map(str::to_string),
        harvest_capable: node.properties.get("harvestCapable").and_then(Value::as_bool).unwrap_or(false),
    }
}
