//! JSON document for dumping drift, diffusion and covariance matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub name: String,
    /// Variable labels for rows and columns.
    pub basis: Vec<String>,
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<Vec<f64>>,
}

impl MatrixDocument {
    pub fn from_matrix(name: &str, basis: &[&str], m: &DMatrix<f64>) -> Self {
        MatrixDocument {
            name: name.to_string(),
            basis: basis.iter().map(|s| s.to_string()).collect(),
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.data[i][j])
    }
}
