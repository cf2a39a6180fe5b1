//! Matrix interchange: JSON `{"rows", "cols", "data": [[re, im], ...]}` and
//! CSV with one row per line and `re,im` pairs, both row-major.

use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "{} entries for a {}×{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|[re, im]| C64::new(*re, *im)),
        ))
    }
}

pub(crate) fn ser_matrix<S: Serializer>(m: &DMatrix<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    MatrixDoc::from_matrix(m).serialize(s)
}

pub fn to_json(m: &DMatrix<C64>) -> String {
    serde_json::to_string(&MatrixDoc::from_matrix(m)).expect("matrix serialization cannot fail")
}

pub fn from_json(s: &str) -> Result<DMatrix<C64>> {
    let doc: MatrixDoc = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    doc.to_matrix()
}

/// Each line holds one row: `re,im,re,im,...`.
pub fn to_csv(m: &DMatrix<C64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:e},{:e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv(s: &str) -> Result<DMatrix<C64>> {
    let mut rows = Vec::new();
    for (ln, line) in s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
        if vals.len() % 2 != 0 {
            return Err(Error::Parse(format!("line {}: odd number of values", ln + 1)));
        }
        rows.push(vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect::<Vec<_>>());
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("rows have different lengths".into()));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}
