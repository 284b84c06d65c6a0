//! Per-pair match files: CSV with header `u0,v0,u1,v1`, one match per row.

use std::path::Path;

use super::{read_text, write_atomic, IoError};
use crate::geometry::Pixel;
use crate::motion::Correspondence;

pub const MATCHES_HEADER: [&str; 4] = ["u0", "v0", "u1", "v1"];

/// `000012_000013.csv` for the pair (12, 13).
pub fn matches_file_name(first: usize, second: usize) -> String {
    format!("{first:06}_{second:06}.csv")
}

pub fn format_matches(matches: &[Correspondence]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MATCHES_HEADER).expect("in-memory write");
    for m in matches {
        w.write_record([m.a.u, m.a.v, m.b.u, m.b.v].map(|x| x.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parses match CSV text. The header row is optional; row numbers in
/// errors are 1-based file lines.
pub fn parse_matches(text: &str, path: &Path) -> Result<Vec<Correspondence>, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let err = |message: String| IoError::Parse { path: path.to_path_buf(), line, message };
        let record = record.map_err(|e| err(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0 && record.iter().eq(MATCHES_HEADER) {
            continue;
        }
        if record.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", record.len())));
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(format!("`{field}` is not a number")))?;
        }
        out.push(Correspondence::new(Pixel::new(v[0], v[1]), Pixel::new(v[2], v[3])));
    }
    Ok(out)
}

pub fn read_matches(path: &Path) -> Result<Vec<Correspondence>, IoError> {
    parse_matches(&read_text(path)?, path)
}

pub fn write_matches(matches: &[Correspondence], path: &Path) -> Result<(), IoError> {
    write_atomic(path, format_matches(matches).as_bytes())
}
