use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Column-major table of named real-valued features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    rows: usize,
}

impl ColumnMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        check_len("column names", columns.len(), names.len())?;
        let rows = columns.first().map_or(0, Vec::len);
        for c in &columns {
            check_len("matrix column", rows, c.len())?;
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Spec(format!("duplicate column `{n}`")));
            }
        }
        Ok(ColumnMatrix {
            names,
            columns,
            rows,
        })
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for r in rows {
            check_len("row", names.len(), r.len())?;
            for (c, v) in columns.iter_mut().zip(r) {
                c.push(*v);
            }
        }
        let mut m = Self::new(names, columns)?;
        m.rows = rows.len();
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Result<&[f64]> {
        self.index_of(name)
            .map(|j| self.column(j))
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> ColumnMatrix {
        ColumnMatrix {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            rows: rows.len(),
        }
    }

    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<ColumnMatrix> {
        let mut columns = Vec::with_capacity(names.len());
        for n in names {
            columns.push(self.column_by_name(n.as_ref())?.to_vec());
        }
        let mut m = ColumnMatrix::new(names.iter().map(|n| n.as_ref().to_string()).collect(), columns)?;
        m.rows = self.rows;
        Ok(m)
    }

    /// Column indices of `names` in this matrix, failing on the first absent one.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| Error::Schema(format!("missing feature column `{n}`")))
            })
            .collect()
    }
}
