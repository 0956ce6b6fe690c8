//! Plain-text tables: `#`-prefixed metadata lines, one header line naming the
//! columns with units, then comma-separated rows in shortest round-trip form.
//!
//! The checksum covers the header and rows only, so two runs of the same
//! configuration hash identically even though their timestamps differ.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table {
            metadata: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    fn check(&self) -> Result<()> {
        if self.columns.iter().any(|c| c.contains([',', '\n']) || c.starts_with('#')) {
            return Err(Error::invalid("column names may not contain ',' or newlines or start with '#'"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(Error::invalid(format!(
                    "row {i} has {} values for {} columns",
                    row.len(),
                    self.columns.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("row {i} contains non-finite value {x}")));
            }
        }
        Ok(())
    }

    fn payload(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (j, &x) in row.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                push_float(&mut s, x);
            }
            s.push('\n');
        }
        s
    }

    /// Full file text and the SHA-256 of its payload.
    pub fn render(&self) -> Result<(String, String)> {
        self.check()?;
        let mut text = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(text, "# {k}: {}", v.replace('\n', " "));
        }
        let payload = self.payload();
        let digest = sha256_hex(payload.as_bytes());
        text.push_str(&payload);
        Ok((text, digest))
    }

    pub fn parse(text: &str) -> Result<Table> {
        let bad = |reason: String| Error::Format { what: "table", reason };
        let mut metadata = Vec::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
            let body = line[1..].trim_start();
            let (k, v) = body.split_once(": ").unwrap_or((body, ""));
            metadata.push((k.to_string(), v.to_string()));
        }
        let header = lines.next().ok_or_else(|| bad("missing header line".into()))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("row {i}: {e}")))?;
            if row.len() != columns.len() {
                return Err(bad(format!("row {i} has {} fields, expected {}", row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(Table { metadata, columns, rows })
    }
}

/// Shortest digits that parse back to the same double; exponent form outside [1e-4, 1e16).
fn push_float(s: &mut String, x: f64) {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        let _ = write!(s, "{x}");
    } else {
        let _ = write!(s, "{x:e}");
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes the table and returns the payload checksum.
pub fn write_table(table: &Table, path: &Path) -> Result<String> {
    let (text, digest) = table.render()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(digest)
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Table::parse(&text)
}
