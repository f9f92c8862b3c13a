//! Report emission: CSV with `#`-prefixed metadata comments and a header
//! row, JSON pretty-printed with sorted keys, both written atomically
//! (write-then-rename). Bodies are byte-identical across reruns with the
//! same config and seed; timestamps live only in comment lines.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::comparison::CertRow;
use crate::error::Result;

/// Deterministic float formatting (shortest round-trip representation).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug, Default)]
pub struct CsvReport {
    /// Metadata lines, emitted with a leading `# `.
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvReport {
    pub fn new(header: &[&str]) -> Self {
        CsvReport {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// CSV of certification rows with the fixed column contract.
pub fn cert_rows_csv(rows: &[CertRow], comments: &[String]) -> CsvReport {
    let mut csv = CsvReport::new(&[
        "inequality_id",
        "grid_size",
        "max_slack",
        "min_slack",
        "violated_count",
    ]);
    for c in comments {
        csv.comment(c.clone());
    }
    for r in rows {
        csv.row(vec![
            r.inequality_id.clone(),
            r.grid_size.to_string(),
            fmt_f64(r.max_slack),
            fmt_f64(r.min_slack),
            r.violated_count.to_string(),
        ]);
    }
    csv
}

/// Pretty-printed JSON with sorted keys, written atomically.
pub fn write_json_atomic(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json serialization");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
