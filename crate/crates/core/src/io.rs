//! Deterministic CSV emission with self-describing `#` headers.
//!
//! Floats use Rust's shortest round-trip decimal formatting, which is
//! platform independent, so equal inputs give byte-identical files.

use std::io::{BufRead, Write};

use crate::{Result, VERSION};

/// Bumped whenever a column layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip decimal; `-0` is written as `0`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Ordered `key: value` lines written before the column row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    kind: String,
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            entries: Vec::new(),
        }
    }

    pub fn entry(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        self.entries.push((key.into(), value));
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# rzbattery {} schema={}", self.kind, SCHEMA_VERSION)?;
        writeln!(w, "# version: {VERSION}")?;
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    /// Parses the leading `#` block of a file written by [`Header::write_to`].
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut header = Header::default();
        for line in r.lines() {
            let line = line?;
            let Some(body) = line.strip_prefix("# ") else {
                break;
            };
            if let Some(rest) = body.strip_prefix("rzbattery ") {
                header.kind = rest.split(' ').next().unwrap_or_default().to_string();
            } else if let Some((k, v)) = body.split_once(": ") {
                if k != "version" {
                    header.entries.push((k.to_string(), v.to_string()));
                }
            }
        }
        Ok(header)
    }
}

/// Writes a header followed by a numeric table.
pub fn write_table<W, I>(w: &mut W, header: &Header, columns: &[&str], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<f64>>,
{
    header.write_to(w)?;
    let mut csv = csv::WriterBuilder::new().from_writer(w);
    csv.write_record(columns)?;
    for row in rows {
        csv.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    csv.flush()?;
    Ok(())
}

/// Like [`write_table`] but with preformatted string cells.
pub fn write_text_table<W, I>(w: &mut W, header: &Header, columns: &[&str], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<String>>,
{
    header.write_to(w)?;
    let mut csv = csv::WriterBuilder::new().from_writer(w);
    csv.write_record(columns)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}
