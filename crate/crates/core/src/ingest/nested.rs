//! The nested exchange format: `<unit>` elements with child metadata
//! elements, nested to express hierarchy.
//!
//! ```xml
//! <export>
//!   <unit id="terezin" level="fonds">
//!     <title>Terezín ghetto collection</title>
//!     <date>1941/1945</date>
//!     <unit id="terezin-1" level="series">...</unit>
//!   </unit>
//! </export>
//! ```
//!
//! Record paths seen by mapping rules: `@attr` for unit attributes,
//! `element` and `element/child` for metadata, `element/@attr` for their
//! attributes.

use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{check_required, first, local_id, map_record, missing_id, IngestError, ParsedBatch, Record, Rejection, UnitTree};
use crate::archival::{DocumentaryUnit, ValidationReport};
use crate::ingest::profile::MappingProfile;

const UNIT: &[u8] = b"unit";

#[derive(Debug, Default)]
struct RawUnit {
    position: u64,
    record: Record,
    children: Vec<RawUnit>,
}

impl RawUnit {
    fn walk<'a>(&'a self, out: &mut Vec<&'a Record>) {
        out.push(&self.record);
        for c in &self.children {
            c.walk(out);
        }
    }
}

struct Frame {
    unit: RawUnit,
    path: Vec<String>,
    text: String,
}

fn malformed(reader: &Reader<&[u8]>, reason: impl ToString) -> IngestError {
    IngestError::MalformedInput { position: reader.buffer_position(), reason: reason.to_string() }
}

fn read_attributes(
    reader: &Reader<&[u8]>,
    e: &BytesStart<'_>,
    prefix: &str,
    record: &mut Record,
) -> Result<(), IngestError> {
    for attr in e.attributes() {
        let attr = attr.map_err(|err| malformed(reader, err))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr.unescape_value().map_err(|err| malformed(reader, err))?.into_owned();
        record.entry(format!("{prefix}@{key}")).or_default().push(value);
    }
    Ok(())
}

fn read_units(bytes: &[u8]) -> Result<Vec<RawUnit>, IngestError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    let mut roots = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut outside_depth = 0usize;

    loop {
        let position = reader.buffer_position();
        let event = reader.read_event().map_err(|e| malformed(&reader, e))?;
        match event {
            Event::Start(e) if e.local_name().as_ref() == UNIT => {
                let mut unit = RawUnit { position, ..RawUnit::default() };
                read_attributes(&reader, &e, "", &mut unit.record)?;
                stack.push(Frame { unit, path: Vec::new(), text: String::new() });
            }
            Event::Empty(e) if e.local_name().as_ref() == UNIT => {
                let mut unit = RawUnit { position, ..RawUnit::default() };
                read_attributes(&reader, &e, "", &mut unit.record)?;
                match stack.last_mut() {
                    Some(parent) if parent.path.is_empty() => parent.unit.children.push(unit),
                    Some(_) => return Err(malformed(&reader, "unit nested inside a metadata element")),
                    None => roots.push(unit),
                }
            }
            Event::Start(e) => match stack.last_mut() {
                Some(frame) => {
                    frame.path.push(String::from_utf8_lossy(e.local_name().as_ref()).into_owned());
                    frame.text.clear();
                    let prefix = format!("{}/", frame.path.join("/"));
                    read_attributes(&reader, &e, &prefix, &mut frame.unit.record)?;
                }
                None => outside_depth += 1,
            },
            Event::Empty(e) => {
                if let Some(frame) = stack.last_mut() {
                    let mut path = frame.path.clone();
                    path.push(String::from_utf8_lossy(e.local_name().as_ref()).into_owned());
                    let key = path.join("/");
                    read_attributes(&reader, &e, &format!("{key}/"), &mut frame.unit.record)?;
                    frame.unit.record.entry(key).or_default().push(String::new());
                }
            }
            Event::Text(t) => {
                if let Some(frame) = stack.last_mut().filter(|f| !f.path.is_empty()) {
                    frame.text.push_str(&t.unescape().map_err(|e| malformed(&reader, e))?);
                }
            }
            Event::CData(t) => {
                if let Some(frame) = stack.last_mut().filter(|f| !f.path.is_empty()) {
                    frame.text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(e) if e.local_name().as_ref() == UNIT => {
                let frame = stack.pop().ok_or_else(|| malformed(&reader, "unbalanced </unit>"))?;
                if !frame.path.is_empty() {
                    return Err(malformed(&reader, "</unit> inside a metadata element"));
                }
                match stack.last_mut() {
                    Some(parent) if parent.path.is_empty() => parent.unit.children.push(frame.unit),
                    Some(_) => return Err(malformed(&reader, "unit nested inside a metadata element")),
                    None => roots.push(frame.unit),
                }
            }
            Event::End(_) => match stack.last_mut() {
                Some(frame) => {
                    let key = frame.path.join("/");
                    frame.unit.record.entry(key).or_default().push(std::mem::take(&mut frame.text));
                    frame.path.pop();
                }
                None => outside_depth = outside_depth.saturating_sub(1),
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() || outside_depth > 0 {
        return Err(malformed(&reader, "unexpected end of document"));
    }
    Ok(roots)
}

/// Parses exchange-format markup into one tree per top-level unit.
pub fn parse_nested(bytes: &[u8], profile: &MappingProfile) -> Result<ParsedBatch, IngestError> {
    let roots = read_units(bytes)?;
    let mut records = Vec::new();
    for r in &roots {
        r.walk(&mut records);
    }
    check_required(&records, profile)?;

    let mut batch = ParsedBatch::default();
    for raw in &roots {
        if let Some(tree) = map_unit(raw, None, profile, &mut batch)? {
            batch.trees.push(tree);
        }
    }
    Ok(batch)
}

fn map_unit(
    raw: &RawUnit,
    parent: Option<&str>,
    profile: &MappingProfile,
    batch: &mut ParsedBatch,
) -> Result<Option<UnitTree>, IngestError> {
    let source_ref = format!("byte {}", raw.position);
    let level_token = profile.level.path().and_then(|p| first(&raw.record, p));
    let level = profile.level.resolve(level_token).ok_or_else(|| IngestError::InvalidLevel {
        source_ref: source_ref.clone(),
        token: level_token.unwrap_or_default().to_string(),
    })?;
    let id = match local_id(&raw.record, profile) {
        Ok(id) => id,
        Err(path) => {
            batch.rejected.push(missing_id(&source_ref, &path));
            for child in &raw.children {
                reject_subtree(child, &source_ref, batch);
            }
            return Ok(None);
        }
    };
    let mut unit = map_record(&raw.record, id, level, profile, &source_ref, &mut batch.warnings);
    unit.parent = parent.map(str::to_string);
    let mut tree = UnitTree { source_ref, unit, children: Vec::new() };
    for child in &raw.children {
        if let Some(c) = map_unit(child, Some(&tree.unit.local_id), profile, batch)? {
            tree.children.push(c);
        }
    }
    Ok(Some(tree))
}

fn reject_subtree(raw: &RawUnit, ancestor: &str, batch: &mut ParsedBatch) {
    let source_ref = format!("byte {}", raw.position);
    let mut report = ValidationReport::new(&source_ref);
    report.error("ancestor-rejected", "parent", format!("ancestor at {ancestor} was rejected"));
    batch.rejected.push(Rejection { source_ref, report });
    for child in &raw.children {
        reject_subtree(child, ancestor, batch);
    }
}

/// Writes trees in the exchange format read by
/// [`MappingProfile::canonical_exchange`].
pub fn serialize_exchange(trees: &[UnitTree]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<export>\n");
    for tree in trees {
        write_unit(&mut out, tree, 1);
    }
    out.push_str("</export>\n");
    out
}

fn write_unit(out: &mut String, tree: &UnitTree, depth: usize) {
    let pad = "  ".repeat(depth);
    let u: &DocumentaryUnit = &tree.unit;
    let _ = writeln!(out, "{pad}<unit id=\"{}\" level=\"{}\">", escape(u.local_id.as_str()), u.level);
    let mut element = |name: &str, value: &str| {
        let _ = writeln!(out, "{pad}  <{name}>{}</{name}>", escape(value));
    };
    element("title", &u.title);
    for d in &u.dates_of_creation {
        element("date", &d.to_string());
    }
    if u.undated {
        element("date", "undated");
    }
    for l in &u.language_of_material {
        element("language", l);
    }
    for (name, value) in [
        ("descriptionLanguage", &u.language_of_description),
        ("scope", &u.scope_content),
        ("extent", &u.extent),
    ] {
        if !value.is_empty() {
            element(name, value);
        }
    }
    for (name, list) in [("keyword", &u.keywords), ("place", &u.places), ("person", &u.persons), ("department", &u.departments)] {
        for v in list {
            element(name, v);
        }
    }
    if !u.provenance_note.is_empty() {
        element("note", &u.provenance_note);
    }
    if !u.source_system.is_empty() {
        element("source", &u.source_system);
    }
    for child in &tree.children {
        write_unit(out, child, depth + 1);
    }
    let _ = writeln!(out, "{pad}</unit>");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archival::Level;
    use crate::ingest::profile::MappingProfile;

    const DOC: &str = r#"<?xml version="1.0"?>
<export>
  <unit id="f1" level="fonds">
    <title>Ghetto &amp; camp</title>
    <date>1941/1945</date>
    <unit id="s1" level="series">
      <title>Daily orders</title>
      <date>Frühjahr 1944</date>
      <keyword>kw-daily-bulletins</keyword>
      <keyword>kw-terezin</keyword>
    </unit>
    <unit level="file"><title>no id</title><unit id="x" level="item"><title>orphan</title></unit></unit>
  </unit>
</export>"#;

    #[test]
    fn nesting_parent_links_and_quarantine() {
        let batch = parse_nested(DOC.as_bytes(), &MappingProfile::canonical_exchange()).unwrap();
        assert_eq!(batch.trees.len(), 1);
        let root = &batch.trees[0];
        assert_eq!(root.unit.title, "Ghetto & camp");
        assert_eq!(root.depth(), 2);
        let series = &root.children[0].unit;
        assert_eq!(series.level, Level::Series);
        assert_eq!(series.parent.as_deref(), Some("f1"));
        assert_eq!(series.keywords, vec!["kw-daily-bulletins", "kw-terezin"]);
        assert!(series.undated);
        assert_eq!(series.provenance_note, "unparsed date: Frühjahr 1944");
        assert_eq!(batch.warnings[0].code, "unparsed-date");
        let codes: Vec<_> = batch.rejected.iter().map(|r| r.report.codes()[0].to_string()).collect();
        assert_eq!(codes, vec!["missing-id", "ancestor-rejected"]);
        assert_eq!(batch.record_count(), 4);
    }

    #[test]
    fn errors() {
        let p = MappingProfile::canonical_exchange();
        let err = parse_nested(b"<export><unit id=\"a\" level=\"fonds\"><title>x</unit></export>", &p).unwrap_err();
        assert_eq!(err.code(), "malformed-input");
        let err = parse_nested(b"<export><unit id=\"a\" level=\"fonds\">", &p).unwrap_err();
        assert_eq!(err.code(), "malformed-input");
        let err = parse_nested(b"<export><unit id=\"a\" level=\"box\"/></export>", &p).unwrap_err();
        assert_eq!(err.code(), "invalid-level");
        let mut strict = p.clone();
        strict.fields[0].required = true;
        let err = parse_nested(b"<export><unit id=\"a\" level=\"fonds\"/></export>", &strict).unwrap_err();
        assert!(matches!(&err, IngestError::ProfileMismatch(p) if p == "title"), "{err}");
        assert!(parse_nested(b"<?xml version=\"1.0\"?>\n<export/>", &strict).unwrap().trees.is_empty());
        assert!(parse_nested(b"", &strict).unwrap().trees.is_empty());
    }

    #[test]
    fn serialize_then_parse() {
        let p = MappingProfile::canonical_exchange();
        let batch = parse_nested(DOC.as_bytes(), &p).unwrap();
        let again = parse_nested(serialize_exchange(&batch.trees).as_bytes(), &p).unwrap();
        // source refs are byte offsets and differ between documents
        let strip = |t: &[UnitTree]| t.iter().map(|t| t.units().into_iter().cloned().collect::<Vec<_>>()).collect::<Vec<_>>();
        assert_eq!(strip(&again.trees), strip(&batch.trees));
    }
}
