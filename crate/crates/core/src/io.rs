//! Shared CSV helpers.
//!
//! Every float written by this crate goes through [`fmt_f64`]: scientific
//! notation with 17 significant digits, which round-trips any `f64`
//! exactly and is identical across runs.

use std::io::Read;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("{0}")]
    Csv(String),
    #[error("expected header {expected:?}, found {found:?}")]
    Header {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row}, column {col}: cannot parse `{value}` as a number")]
    Number {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("row {row} has no column {col}")]
    MissingColumn { row: usize, col: usize },
}

/// A CSV file read as strings. Lines starting with `#` are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table<R: Read>(r: R) -> Result<Table, TableError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rdr
        .headers()
        .map_err(|e| TableError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .map(|rec| {
            rec.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| TableError::Csv(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(Table { header, rows })
}

impl Table {
    pub fn expect_header(&self, expected: &[&str]) -> Result<(), TableError> {
        if self
            .header
            .iter()
            .map(String::as_str)
            .eq(expected.iter().copied())
        {
            Ok(())
        } else {
            Err(TableError::Header {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: self.header.clone(),
            })
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn str_at(&self, row: usize, col: usize) -> Result<&str, TableError> {
        self.rows[row]
            .get(col)
            .map(String::as_str)
            .ok_or(TableError::MissingColumn { row, col })
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Result<f64, TableError> {
        let s = self.str_at(row, col)?;
        s.parse().map_err(|_| TableError::Number {
            row,
            col,
            value: s.to_string(),
        })
    }

    /// Like [`f64_at`](Self::f64_at) but an empty cell reads as `None`.
    pub fn opt_f64_at(&self, row: usize, col: usize) -> Result<Option<f64>, TableError> {
        if self.str_at(row, col)?.is_empty() {
            Ok(None)
        } else {
            self.f64_at(row, col).map(Some)
        }
    }
}
