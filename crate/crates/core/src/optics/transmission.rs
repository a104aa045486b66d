use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use crate::error::{check_len, Error, Result};
use crate::seed;

/// Complex random input weights of the multimode fiber.
///
/// Entries are i.i.d. circularly-symmetric complex Gaussian with variance
/// `1/p`. Stored column-major: column `j` is the field produced on the `m`
/// reservoir sites by input pixel `j` alone.
#[derive(Debug, Clone)]
pub struct TransmissionMatrix {
    m: usize,
    p: usize,
    seed: u64,
    entries: Vec<Complex64>,
}

impl TransmissionMatrix {
    pub fn build(m: usize, p: usize, seed: u64) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::domain("m, p", "transmission matrix dimensions must be positive"));
        }
        let normal = Normal::new(0.0, (0.5 / p as f64).sqrt()).expect("finite std");
        let mut rng = seed::rng(seed);
        let entries = (0..m * p)
            .map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        Ok(TransmissionMatrix { m, p, seed, entries })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.entries[j * self.m..(j + 1) * self.m]
    }

    /// `W u` for a Boolean input vector.
    pub fn apply(&self, u: &[bool]) -> Result<Vec<Complex64>> {
        check_len("input vector u", self.p, u.len())?;
        Ok(self.sum_columns(u.iter().enumerate().filter_map(|(j, &on)| on.then_some(j))))
    }

    /// Sum of the given columns.
    pub fn sum_columns(&self, cols: impl IntoIterator<Item = usize>) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        for j in cols {
            for (o, w) in out.iter_mut().zip(self.column(j)) {
                *o += w;
            }
        }
        out
    }
}
