//! Plot-ready CSV emission: '#'-prefixed provenance lines, one header line,
//! then rows of reals printed with 9 significant digits.  Emission is a pure
//! function of the table, so identical tables produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    pub name: String,
    /// Provenance lines (config hash, grid, code version, warnings), without
    /// the leading '#'.
    pub provenance: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl OutputTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        OutputTable {
            name: name.into(),
            provenance: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Renders the table to its exact byte representation.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.provenance {
            out.push('#');
            out.push(' ');
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&format_value(*v));
                first = false;
            }
            out.push('\n');
        }
        out
    }
}

/// 9 significant digits in scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.8e}")
}

/// Short hash of the normalized config text for provenance headers.
pub fn config_hash(normalized: &str) -> String {
    let digest = Sha256::digest(normalized.as_bytes());
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn standard_provenance(hash: &str, grid_desc: &str) -> Vec<String> {
    vec![
        format!("rydeit {}", env!("CARGO_PKG_VERSION")),
        format!("config {hash}"),
        format!("grid {grid_desc}"),
    ]
}

/// Writes the table as `<name>.csv` under `dir`, returning the path.
pub fn emit_table(table: &OutputTable, dir: &Path) -> std::io::Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.csv", table.name));
    let mut file = fs::File::create(&path)?;
    file.write_all(table.render().as_bytes())?;
    Ok(path)
}
