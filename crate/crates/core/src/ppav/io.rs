//! JSON period-matrix files: `{"g": 2, "re": [...], "im": [...]}` with
//! row-major flat arrays of length `g²`. Nested `[[...], ...]` rows are
//! accepted on input.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theta::RiemannMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMatrixFile {
    pub g: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entries {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl Entries {
    fn flatten(self, g: usize) -> Result<Vec<f64>> {
        match self {
            Entries::Flat(v) => Ok(v),
            Entries::Nested(rows) => {
                if rows.len() != g || rows.iter().any(|r| r.len() != g) {
                    return Err(Error::Parse(format!("expected {g} rows of length {g}")));
                }
                Ok(rows.concat())
            }
        }
    }
}

#[derive(Deserialize)]
struct RawFile {
    g: usize,
    re: Entries,
    im: Entries,
}

impl PeriodMatrixFile {
    pub fn from_matrix(tau: &RiemannMatrix) -> Self {
        let g = tau.genus();
        let row_major = |m: &nalgebra::DMatrix<f64>| m.transpose().as_slice().to_vec();
        PeriodMatrixFile {
            g,
            re: row_major(tau.re()),
            im: row_major(tau.im()),
        }
    }

    pub fn to_matrix(&self) -> Result<RiemannMatrix> {
        RiemannMatrix::from_parts(self.g, &self.re, &self.im)
    }
}

pub fn parse_period_matrix(text: &str) -> Result<RiemannMatrix> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let file = PeriodMatrixFile {
        g: raw.g,
        re: raw.re.flatten(raw.g)?,
        im: raw.im.flatten(raw.g)?,
    };
    file.to_matrix()
}

pub fn period_matrix_json(tau: &RiemannMatrix) -> String {
    serde_json::to_string_pretty(&PeriodMatrixFile::from_matrix(tau))
        .expect("period matrix serializes")
}

pub fn read_period_matrix(path: &Path) -> Result<RiemannMatrix> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_period_matrix(&text)
}

pub fn write_period_matrix(path: &Path, tau: &RiemannMatrix) -> Result<()> {
    std::fs::write(path, period_matrix_json(tau) + "\n")
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
