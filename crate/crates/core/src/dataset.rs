//! Column-major numeric sample matrix.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("dataset needs at least one row and one column")]
    Empty,
    #[error("column {column} has {got} rows, expected {expected}")]
    Ragged { column: usize, got: usize, expected: usize },
    #[error("non-finite value in column {column}, row {row}")]
    NonFinite { column: usize, row: usize },
    #[error("{names} column names for {columns} columns")]
    NameCount { names: usize, columns: usize },
}

/// `n` i.i.d. samples of `d` real variables, stored by column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    names: Vec<String>,
    provenance: String,
}

impl Dataset {
    /// Builds a dataset with default names `X1..Xd`.
    pub fn from_columns(columns: Vec<Vec<f64>>, provenance: impl Into<String>) -> Result<Self, DatasetError> {
        let names = (1..=columns.len()).map(|i| format!("X{i}")).collect();
        Self::with_names(columns, names, provenance)
    }

    pub fn with_names(
        columns: Vec<Vec<f64>>,
        names: Vec<String>,
        provenance: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || n == 0 {
            return Err(DatasetError::Empty);
        }
        if names.len() != columns.len() {
            return Err(DatasetError::NameCount { names: names.len(), columns: columns.len() });
        }
        for (column, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(DatasetError::Ragged { column, got: col.len(), expected: n });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { column, row });
            }
        }
        Ok(Dataset { columns, names, provenance: provenance.into() })
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let columns = self.columns.iter().map(|c| indices.iter().map(|&i| c[i]).collect()).collect();
        Dataset { columns, names: self.names.clone(), provenance: self.provenance.clone() }
    }

    /// Keeps the listed columns, in that order.
    pub fn select_columns(&self, keep: &[usize]) -> Dataset {
        Dataset {
            columns: keep.iter().map(|&k| self.columns[k].clone()).collect(),
            names: keep.iter().map(|&k| self.names[k].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// CSV with a header row of column names and `%.17g` numbers.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for row in 0..self.n() {
            for (k, col) in self.columns.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&format_g17(col[row]));
            }
            out.push('\n');
        }
        out
    }
}

/// Formats like C's `printf("%.17g", v)`.
pub fn format_g17(v: f64) -> String {
    const PRECISION: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let mut s = String::new();
        let sign = if exp < 0 { '-' } else { '+' };
        write!(s, "{mantissa}e{sign}{:02}", exp.abs()).unwrap();
        s
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
