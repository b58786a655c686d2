use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;
use crate::CliError;

/// One result table for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest decimal form that reads back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub report: Value,
    pub table: Table,
    pub summary: String,
}

impl Artifact {
    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.report)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Runtime(e.to_string());
                w.write_record(&self.table.header).map_err(io)?;
                for row in &self.table.rows {
                    w.write_record(row).map_err(io)?;
                }
                w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
            }
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
