//! Noise-aware dimensionality: covariance of the state-collect matrix, its
//! eigenvalue spectrum, and the factor indicator function whose minimum
//! marks the number of principal components carrying real variance.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::encoder::LabeledSequence;
use crate::error::{Error, Result};
use crate::optics::{ResponseModel, Simulator};
use crate::seed::Rng;
use crate::state::StateCollectMatrix;

/// Relative threshold below which eigenvalues are clamped to zero.
pub const EIGEN_CLAMP: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;
/// Coefficient of variation of per-node residual variance above which the
/// noise is reported as heteroscedastic.
const HETEROSCEDASTIC_CV: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// Column-mean-centered sample covariance.
    #[default]
    Centered,
    /// Uncentered second moment `MᵀM / (T - 1)`.
    RawSecondMoment,
}

pub fn covariance(m: &StateCollectMatrix) -> Result<DMatrix<f64>> {
    covariance_with(m, CovarianceMode::Centered)
}

pub fn covariance_with(m: &StateCollectMatrix, mode: CovarianceMode) -> Result<DMatrix<f64>> {
    let t = m.steps();
    if t < 2 {
        return Err(Error::domain("T", format!("covariance needs at least 2 rows, got {t}")));
    }
    let mut x = m.matrix().clone();
    if mode == CovarianceMode::Centered {
        for mut col in x.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
    }
    let mut sigma = x.tr_mul(&x) / (t as f64 - 1.0);
    // Round-off can break exact symmetry of the product.
    let n = sigma.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    Ok(sigma)
}

/// Eigenvalues of a covariance matrix, descending and clamped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Number of time steps `T` of the underlying matrix.
    pub steps: usize,
}

impl EigenSpectrum {
    /// Wraps a given spectrum, sorting and clamping it.
    pub fn new(mut eigenvalues: Vec<f64>, steps: usize) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let floor = EIGEN_CLAMP * eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        for v in &mut eigenvalues {
            if *v < floor || *v <= 0.0 {
                *v = 0.0;
            }
        }
        EigenSpectrum { eigenvalues, steps }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn check_symmetric(sigma: &DMatrix<f64>) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::Numeric(format!(
            "covariance must be square, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    let n = sigma.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Numeric(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

pub fn eigen_spectrum(sigma: &DMatrix<f64>, steps: usize) -> Result<EigenSpectrum> {
    check_symmetric(sigma)?;
    let eig = SymmetricEigen::new(sigma.clone());
    Ok(EigenSpectrum::new(eig.eigenvalues.iter().copied().collect(), steps))
}

/// `I(k) = sqrt(Σ_{i>k} Λ_i / (T (n - k))) / (n - k)²` for `k = 1..n-1`.
/// Element `k - 1` of the result holds `I(k)`.
pub fn indicator_function(spec: &EigenSpectrum) -> Result<Vec<f64>> {
    let n = spec.len();
    if n < 2 {
        return Err(Error::domain("n", "indicator function needs at least 2 nodes"));
    }
    if spec.steps == 0 {
        return Err(Error::domain("T", "indicator function needs T >= 1"));
    }
    let t = spec.steps as f64;
    // tail[k] = Σ_{i=k+1}^{n} Λ_i, summed from the smallest eigenvalue up.
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + spec.eigenvalues[k];
    }
    Ok((1..n)
        .map(|k| {
            let rest = (n - k) as f64;
            (tail[k] / (t * rest)).sqrt() / (rest * rest)
        })
        .collect())
}

/// 1-based position of the minimum, ties to the smallest `k`.
pub fn argmin_k(indicator: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in indicator.iter().enumerate() {
        if v < indicator[best] {
            best = i;
        }
    }
    best + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionalityReport {
    pub k_min: usize,
    pub eigenvalues: Vec<f64>,
    pub indicator_values: Vec<f64>,
    /// Spread of the per-node variance left after removing the leading
    /// `k_min` components.
    pub residual_variance_cv: f64,
    /// The indicator assumes homoscedastic Gaussian noise; set when the
    /// residuals look otherwise.
    pub heteroscedastic: bool,
}

pub fn analyze(m: &StateCollectMatrix, mode: CovarianceMode) -> Result<DimensionalityReport> {
    if m.nodes() < 2 {
        return Err(Error::domain("n", "dimensionality needs at least 2 nodes"));
    }
    let sigma = covariance_with(m, mode)?;
    check_symmetric(&sigma)?;
    let eig = SymmetricEigen::new(sigma.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let spec = EigenSpectrum::new(eig.eigenvalues.iter().copied().collect(), m.steps());
    let indicator = indicator_function(&spec)?;
    let k_min = argmin_k(&indicator);

    let n = sigma.nrows();
    let residual: Vec<f64> = (0..n)
        .map(|j| {
            let explained: f64 = order[..k_min]
                .iter()
                .map(|&l| eig.eigenvalues[l].max(0.0) * eig.eigenvectors[(j, l)].powi(2))
                .sum();
            (sigma[(j, j)] - explained).max(0.0)
        })
        .collect();
    let mean = residual.iter().sum::<f64>() / n as f64;
    let cv = if mean > 0.0 {
        (residual.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64).sqrt() / mean
    } else {
        0.0
    };
    Ok(DimensionalityReport {
        k_min,
        eigenvalues: spec.eigenvalues,
        indicator_values: indicator,
        residual_variance_cv: cv,
        heteroscedastic: cv > HETEROSCEDASTIC_CV,
    })
}

pub fn dimensionality(m: &StateCollectMatrix) -> Result<usize> {
    let sigma = covariance(m)?;
    let spec = eigen_spectrum(&sigma, m.steps())?;
    Ok(argmin_k(&indicator_function(&spec)?))
}

/// Dimensionality of the same input sequence with the device switched off:
/// the reservoir is replaced by passive pass-through of `|W u|²`.
pub fn dimensionality_off(system: &Simulator, seq: &LabeledSequence, noise: Option<&mut Rng>) -> Result<usize> {
    let off = system.with_model(ResponseModel::PassThrough);
    dimensionality(&off.respond(seq, noise)?)
}
