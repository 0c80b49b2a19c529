//! Delimited tables with a header row, one unit per row.

use csv::ReaderBuilder;

use super::{check_required, first, local_id, map_record, missing_id, IngestError, ParsedBatch, Record, UnitTree};
use crate::ingest::profile::MappingProfile;

/// Parses a UTF-8 table. Rows with an empty id are quarantined with
/// `missing-id`; a row whose cell count differs from the header fails the
/// whole table with `malformed-row`.
pub fn parse_table(bytes: &[u8], profile: &MappingProfile) -> Result<ParsedBatch, IngestError> {
    let delimiter = u8::try_from(profile.delimiter)
        .map_err(|_| IngestError::InvalidProfile(format!("delimiter `{}` is not ASCII", profile.delimiter)))?;
    let mut reader = ReaderBuilder::new().delimiter(delimiter).has_headers(true).from_reader(bytes);
    let headers: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(|c| c.trim().trim_start_matches('\u{feff}').to_string()).collect(),
        Err(e) => return Err(IngestError::MalformedRow { row: 1, reason: e.to_string() }),
    };

    let mut rows: Vec<(u64, Record)> = Vec::new();
    for (i, result) in reader.records().enumerate() {
        // header is row 1
        let row = i as u64 + 2;
        let record = result.map_err(|e| IngestError::MalformedRow { row, reason: e.to_string() })?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let mut fields = Record::new();
        for (name, cell) in headers.iter().zip(record.iter()) {
            fields.entry(name.clone()).or_default().push(cell.to_string());
        }
        rows.push((row, fields));
    }
    check_required(&rows.iter().map(|(_, r)| r).collect::<Vec<_>>(), profile)?;

    let mut batch = ParsedBatch::default();
    for (row, record) in &rows {
        let source_ref = format!("row {row}");
        let id = match local_id(record, profile) {
            Ok(id) => id,
            Err(path) => {
                batch.rejected.push(missing_id(&source_ref, &path));
                continue;
            }
        };
        let level_token = profile.level.path().and_then(|p| first(record, p));
        let level = profile.level.resolve(level_token).ok_or_else(|| IngestError::InvalidLevel {
            source_ref: source_ref.clone(),
            token: level_token.unwrap_or_default().to_string(),
        })?;
        let unit = map_record(record, id, level, profile, &source_ref, &mut batch.warnings);
        batch.trees.push(UnitTree::leaf(source_ref, unit));
    }
    Ok(batch)
}
