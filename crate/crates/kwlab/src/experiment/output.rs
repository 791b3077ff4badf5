//! Frozen output schemas. CSV numbers carry 17 significant digits.

use crate::asymptotics_lab::VerdictRow;
use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version of every CSV/JSON layout written here.
pub const SCHEMA_VERSION: u32 = 1;

pub const WEYL_SUM_COLUMNS: [&str; 5] = ["lambda", "value", "main_term_pred", "residual", "rel_err"];
pub const TRACE_COLUMNS: [&str; 4] = ["t", "re", "im", "abs"];
pub const STAIRCASE_COLUMNS: [&str; 2] = ["epsilon", "jump_value"];
pub const SOJOURN_COLUMNS: [&str; 4] = ["t", "kind", "family", "prominence"];

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV table under construction.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    width: usize,
}

/// A CSV cell.
pub enum Cell<'a> {
    Num(f64),
    Int(i64),
    Text(&'a str),
}

impl Table {
    pub fn new(columns: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(columns).map_err(csv_err)?;
        Ok(Table { writer, width: columns.len() })
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.width);
        let fields: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Num(x) => num(*x),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s.to_string(),
            })
            .collect();
        self.writer.write_record(&fields).map_err(csv_err)
    }

    /// Numeric-only row.
    pub fn nums(&mut self, xs: &[f64]) -> Result<()> {
        let cells: Vec<Cell<'_>> = xs.iter().map(|x| Cell::Num(*x)).collect();
        self.row(&cells)
    }

    pub fn finish(self) -> Result<Vec<u8>> {
        self.writer.into_inner().map_err(|e| LabError::Serialization(format!("csv: {e}")))
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Serialization(format!("csv: {e}"))
}

/// Files of one run, in emission order.
#[derive(Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub verdicts: Vec<VerdictRow>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| LabError::Serialization(e.to_string()))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn verdict(&mut self, row: VerdictRow) {
        self.verdicts.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub schema_version: u32,
    pub experiment: String,
    pub passed: usize,
    pub failed: usize,
    pub rows: Vec<VerdictRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
