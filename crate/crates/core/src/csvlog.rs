//! In-memory CSV tables with fixed headers.

use std::path::Path;

use crate::error::{EqcoError, Result};

pub const MI_SWEEP_HEADER: &[&str] = &[
    "step",
    "epoch",
    "k",
    "alpha",
    "margin",
    "loss_nce",
    "f_hat_bound",
    "true_mi",
    "theoretical_bound",
];
pub const GRAD_STATS_HEADER: &[&str] = &[
    "epoch",
    "k",
    "mode",
    "grad_norm_mean",
    "grad_norm_var",
    "theorem2_bound",
];
pub const K_SWEEP_HEADER: &[&str] = &[
    "k",
    "mode",
    "alpha",
    "margin",
    "final_loss",
    "f_hat_bound",
    "probe_acc",
];
pub const N_SWEEP_HEADER: &[&str] = &["n", "lr", "final_loss", "probe_acc"];
pub const TRAIN_LOG_HEADER: &[&str] = &[
    "step",
    "epoch",
    "lr",
    "loss",
    "f_hat_bound",
    "grad_norm_mean",
    "grad_norm_var",
    "theorem2_bound",
    "skipped",
];

/// Marker written into metric cells of a grid point whose training failed.
pub const DIVERGED: &str = "diverged";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLog {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvLog {
    pub fn new(header: &[&str]) -> Self {
        CsvLog {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row. Rejects a wrong column count and non-finite numbers.
    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(EqcoError::Precondition(format!(
                "row has {} cells, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        if let Some(bad) = row
            .iter()
            .find(|c| c.parse::<f64>().is_ok_and(|v| !v.is_finite()))
        {
            return Err(EqcoError::Numeric(format!("non-finite cell {bad:?}")));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Appends every row of `other`, which must share the header.
    pub fn extend(&mut self, other: &CsvLog) -> Result<()> {
        if other.header != self.header {
            return Err(EqcoError::Precondition(
                "cannot merge logs with different headers".into(),
            ));
        }
        self.rows.extend(other.rows.iter().cloned());
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EqcoError::Usage(format!("no column named {name:?}")))
    }

    /// Cells of a column as numbers; non-numeric cells (status markers) are `None`.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].parse::<f64>().ok()).collect())
    }

    pub fn column(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    /// Rows whose `name` cell equals `value`, under the same header.
    pub fn filter_eq(&self, name: &str, value: &str) -> Result<CsvLog> {
        let i = self.column_index(name)?;
        Ok(CsvLog {
            header: self.header.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r[i] == value)
                .cloned()
                .collect(),
        })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| EqcoError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| EqcoError::Precondition(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<CsvLog> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut log = CsvLog {
            header,
            rows: Vec::new(),
        };
        for rec in r.records() {
            log.push(rec?.iter().map(str::to_string).collect())?;
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<CsvLog> {
        CsvLog::parse(&std::fs::read_to_string(path)?)
    }
}
