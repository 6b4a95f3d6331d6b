//! Headerless comma-separated point files.

use std::path::Path;

use center_outward::PointSetF64;

use crate::error::{CliError, CliResult};

/// Read points from `path`; `header` skips the first line. When `dim` is
/// given every row must have that many columns, otherwise the first row fixes it.
pub fn read_points(path: &Path, header: bool, dim: Option<usize>) -> CliResult<PointSetF64> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    parse_points(&text, header, dim).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {}", path.display(), m)),
        other => other,
    })
}

pub fn parse_points(text: &str, header: bool, dim: Option<usize>) -> CliResult<PointSetF64> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(header).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut dim = dim;
    let mut coords = Vec::new();
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Validation(format!("malformed CSV: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let want = *dim.get_or_insert(rec.len());
        if rec.len() != want {
            return Err(CliError::Validation(format!("line {line}: expected {want} columns, found {}", rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::Validation(format!("line {line}: cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(CliError::Validation(format!("line {line}: non-finite value {field:?}")));
            }
            coords.push(v);
        }
        rows += 1;
    }
    let d = dim.ok_or_else(|| CliError::Validation("no data rows".into()))?;
    debug_assert_eq!(coords.len(), rows * d);
    Ok(PointSetF64::from_flat(d, coords)?)
}

/// 17 significant digits, the lossless width for binary64.
pub fn fmt(x: f64) -> String {
    center_outward::experiments::fmt_f64(x)
}

pub fn format_row(values: &[f64]) -> String {
    values.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(",")
}
