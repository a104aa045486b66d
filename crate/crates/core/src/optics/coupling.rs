//! Lateral coupling between reservoir sites: a Gaussian carrier-diffusion
//! blur mixed with a fixed random unitary that stands in for diffractive
//! global coupling.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng as _;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};
use crate::seed;

/// `D = c * ((1 - γ) K + γ U)` on a square grid of `side * side` sites.
///
/// `K` is a circular Gaussian blur with unit kernel sum. `U` is the unitary
/// `P3 F P2 F P1` built from three random phase masks and the normalized
/// DFT over the flattened site index. The scalar `c` normalizes `D` to unit
/// mean power gain over white fields, `‖D‖_F² = m`.
#[derive(Clone)]
pub struct CouplingOperator {
    side: usize,
    kernel: Vec<f64>,
    mix_weight: f64,
    phases: [Vec<Complex64>; 3],
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
    seed: u64,
}

impl std::fmt::Debug for CouplingOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CouplingOperator")
            .field("side", &self.side)
            .field("kernel_len", &self.kernel.len())
            .field("mix_weight", &self.mix_weight)
            .field("scale", &self.scale)
            .field("seed", &self.seed)
            .finish()
    }
}

/// Normalized 1-D Gaussian taps on `-r..=r` with `r = ceil(3ℓ)`.
pub fn gaussian_kernel(diffusion_length: f64) -> Vec<f64> {
    if diffusion_length <= 1e-9 {
        return vec![1.0];
    }
    let radius = (3.0 * diffusion_length).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * diffusion_length * diffusion_length)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

impl CouplingOperator {
    pub fn new(sites: usize, diffusion_length: f64, mix_weight: f64, seed: u64) -> Result<Self> {
        let side = (sites as f64).sqrt().round() as usize;
        if side * side != sites || sites == 0 {
            return Err(Error::domain("sites", format!("must be a positive perfect square, got {sites}")));
        }
        if !(0.0..=1.0).contains(&mix_weight) {
            return Err(Error::domain("mix_weight", format!("must lie in [0, 1], got {mix_weight}")));
        }
        if !(diffusion_length >= 0.0 && diffusion_length.is_finite()) {
            return Err(Error::domain("diffusion_length", "must be finite and non-negative"));
        }
        let mut rng = seed::rng(seed);
        let mut mask = || -> Vec<Complex64> {
            (0..sites)
                .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect()
        };
        let phases = [mask(), mask(), mask()];
        let fft = FftPlanner::new().plan_fft_forward(sites);
        let mut op = CouplingOperator {
            side,
            kernel: gaussian_kernel(diffusion_length),
            mix_weight,
            phases,
            fft,
            scale: 1.0,
            seed,
        };
        op.scale = op.unit_power_scale();
        Ok(op)
    }

    pub fn sites(&self) -> usize {
        self.side * self.side
    }

    pub fn mix_weight(&self) -> f64 {
        self.mix_weight
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Circular separable blur.
    pub fn blur(&self, field: &[Complex64]) -> Vec<Complex64> {
        let side = self.side as isize;
        let r = (self.kernel.len() / 2) as isize;
        if r == 0 {
            return field.to_vec();
        }
        let wrap = |i: isize| i.rem_euclid(side) as usize;
        let mut tmp = vec![Complex64::new(0.0, 0.0); field.len()];
        for row in 0..side {
            for col in 0..side {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &w) in self.kernel.iter().enumerate() {
                    let c = wrap(col + k as isize - r);
                    acc += field[row as usize * self.side + c] * w;
                }
                tmp[row as usize * self.side + col as usize] = acc;
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); field.len()];
        for row in 0..side {
            for col in 0..side {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &w) in self.kernel.iter().enumerate() {
                    let rr = wrap(row + k as isize - r);
                    acc += tmp[rr * self.side + col as usize] * w;
                }
                out[row as usize * self.side + col as usize] = acc;
            }
        }
        out
    }

    /// Global random unitary `P3 F P2 F P1`.
    pub fn global_mix(&self, field: &[Complex64]) -> Vec<Complex64> {
        let norm = 1.0 / (self.sites() as f64).sqrt();
        let mut buf: Vec<Complex64> = field.iter().zip(&self.phases[0]).map(|(a, p)| a * p).collect();
        self.fft.process(&mut buf);
        for (b, p) in buf.iter_mut().zip(&self.phases[1]) {
            *b *= p * norm;
        }
        self.fft.process(&mut buf);
        for (b, p) in buf.iter_mut().zip(&self.phases[2]) {
            *b *= p * norm;
        }
        buf
    }

    fn apply_unscaled(&self, field: &[Complex64]) -> Vec<Complex64> {
        let g = self.mix_weight;
        match g {
            0.0 => self.blur(field),
            1.0 => self.global_mix(field),
            _ => {
                let local = self.blur(field);
                let global = self.global_mix(field);
                local
                    .iter()
                    .zip(&global)
                    .map(|(l, u)| l * (1.0 - g) + u * g)
                    .collect()
            }
        }
    }

    pub fn apply(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len("coupling input field", self.sites(), field.len())?;
        let mut out = self.apply_unscaled(field);
        if self.scale != 1.0 {
            for z in &mut out {
                *z *= self.scale;
            }
        }
        Ok(out)
    }

    /// `sqrt(m / ‖(1-γ)K + γU‖_F²)`, evaluated column by column.
    fn unit_power_scale(&self) -> f64 {
        let m = self.sites();
        let g = self.mix_weight;
        if g == 1.0 {
            return 1.0;
        }
        let k2: f64 = self.kernel.iter().map(|k| k * k).sum::<f64>().powi(2);
        let mut frob = (1.0 - g).powi(2) * m as f64 * k2 + g * g * m as f64;
        if g > 0.0 {
            let mut cross = 0.0;
            let mut e = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..m {
                e[j] = Complex64::new(1.0, 0.0);
                let kj = self.blur(&e);
                let uj = self.global_mix(&e);
                cross += kj.iter().zip(&uj).map(|(k, u)| (k.conj() * u).re).sum::<f64>();
                e[j] = Complex64::new(0.0, 0.0);
            }
            frob += 2.0 * g * (1.0 - g) * cross;
        }
        (m as f64 / frob).sqrt()
    }
}
