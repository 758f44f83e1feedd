//! Matrix files: a metadata header and the entries as nested `[re, im]` rows.

use crate::error::CliError;
use cube_rmatrix::{ComplexMatrix, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FORMAT: &str = "cube-rmatrix/matrix";
pub const CONVENTION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub format: String,
    pub convention: u32,
    pub model: String,
    pub kind: String,
    #[serde(rename = "N")]
    pub n: usize,
    /// Couplings as supplied, per axis and harmonic, as `[re, im]`.
    pub couplings: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub header: MatrixHeader,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<[f64; 2]>>,
}

impl MatrixFile {
    pub fn new(header: MatrixHeader, m: &ComplexMatrix) -> Self {
        let data = (0..m.nrows()).map(|r| (0..m.ncols()).map(|q| [m[(r, q)].re, m[(r, q)].im]).collect()).collect();
        Self { header, rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn matrix(&self) -> Result<ComplexMatrix, CliError> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(CliError::config(format!("data is not {}x{}", self.rows, self.cols)));
        }
        Ok(ComplexMatrix::from_fn(self.rows, self.cols, |r, q| {
            let [re, im] = self.data[r][q];
            C64::new(re, im)
        }))
    }
}

pub fn write_matrix(path: &Path, file: &MatrixFile) -> Result<(), CliError> {
    let text = serde_json::to_string(file).map_err(CliError::internal)?;
    crate::error::write_file(path, &text)
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::config(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())))
}
