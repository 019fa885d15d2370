//! Result rows and their CSV form.

use crate::error::{HarnessError, Result};
use std::io::Write;
use std::path::Path;

pub const HEADER: [&str; 7] = ["experiment", "params", "estimate", "stderr", "reference", "n", "wall_s"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// `key=value` pairs joined by `;`.
    pub params: String,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub reference: Option<f64>,
    pub n: u64,
    pub wall_s: Option<f64>,
}

/// Shortest decimal string that parses back to the same `f64`.
fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str, name: &str, row: usize) -> std::result::Result<Option<f64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| format!("row {row}: `{name}` is not a number: {field:?}"))
}

/// Formats `key=value` parameter lists.
pub fn params(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Looks up `key` in a parameter string built by [`params`].
pub fn param(params: &str, key: &str) -> Option<f64> {
    params.split(';').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

pub fn to_csv(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(HEADER).expect("writing to memory");
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.params.clone(),
            r.estimate.to_string(),
            num(r.stderr),
            num(r.reference),
            r.n.to_string(),
            num(r.wall_s),
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

/// Writes the CSV next to `path` and renames it into place.
pub fn write_atomic(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(&to_csv(rows)).map_err(|e| HarnessError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let header = r.headers().map_err(|e| HarnessError::csv(path, e))?.clone();
    if header.iter().ne(HEADER) {
        return Err(HarnessError::config(path, format!("header must be {:?}", HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::csv(path, e))?;
        let row = i + 1;
        let bad = |m: String| HarnessError::config(path, m);
        let estimate = parse_opt(&rec[2], "estimate", row)
            .map_err(bad)?
            .ok_or_else(|| bad(format!("row {row}: `estimate` is empty")))?;
        let stderr = parse_opt(&rec[3], "stderr", row).map_err(bad)?;
        if stderr.is_some_and(|s| !(s >= 0.0)) {
            return Err(bad(format!("row {row}: `stderr` must be nonnegative")));
        }
        rows.push(ResultRow {
            experiment: rec[0].to_string(),
            params: rec[1].to_string(),
            estimate,
            stderr,
            reference: parse_opt(&rec[4], "reference", row).map_err(bad)?,
            n: rec[5].parse().map_err(|_| bad(format!("row {row}: `n` is not an integer")))?,
            wall_s: parse_opt(&rec[6], "wall_s", row).map_err(bad)?,
        });
    }
    Ok(rows)
}
