use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Where a state-collect matrix came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sequence_seed: u64,
    pub params_hash: String,
}

impl Provenance {
    pub fn new<P: Serialize>(sequence_seed: u64, params: &P) -> Self {
        Provenance {
            sequence_seed,
            params_hash: params_hash(params),
        }
    }
}

/// First 16 hex digits of the SHA-256 of the JSON encoding.
pub fn params_hash<P: Serialize>(params: &P) -> String {
    let json = serde_json::to_vec(params).expect("params serialize");
    let digest = Sha256::digest(&json);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `T × n` matrix whose column `i` is the response of node `i` over the
/// input sequence and whose row `t` is the reservoir state for input `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCollectMatrix {
    data: DMatrix<f64>,
    pub provenance: Provenance,
}

impl StateCollectMatrix {
    pub fn new(data: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("state-collect matrix has non-finite entries".into()));
        }
        Ok(StateCollectMatrix { data, provenance })
    }

    pub fn from_rows(rows: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let t = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Numeric("ragged rows in state-collect matrix".into()));
        }
        Self::new(DMatrix::from_fn(t, n, |i, j| rows[i][j]), provenance)
    }

    pub fn steps(&self) -> usize {
        self.data.nrows()
    }

    pub fn nodes(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn row(&self, t: usize) -> Vec<f64> {
        self.data.row(t).iter().copied().collect()
    }

    /// Column `i` as a contiguous slice (storage is column-major).
    pub fn column(&self, i: usize) -> &[f64] {
        let t = self.steps();
        &self.data.as_slice()[i * t..(i + 1) * t]
    }
}
