//! Steady-state response of the injection-locked large-area VCSEL.
//!
//! Intensities are expressed in units of the mean per-site free-running
//! power, `P_VCSEL / m`. An injected field with total power `PR` (in units
//! of `P_VCSEL`) therefore produces a mean site intensity of about `PR`.

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::seed::{self, Rng};

/// Threshold current of the reference device in mA.
pub const THRESHOLD_CURRENT_MA: f64 = 20.0;
/// Free-running output power at `1.5 · I_th` in mW.
pub const REFERENCE_POWER_MW: f64 = 3.6;
/// Cavity resonance wavelength in nm; detunings are relative to it.
pub const RESONANCE_NM: f64 = 918.9;

const MIN_POWER_RATIO: f64 = 1e-6;

/// Physical knobs and model constants of the reservoir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirParams {
    /// `I_bias / I_th`.
    pub bias_ratio: f64,
    /// `P_inj / P_VCSEL`.
    pub power_ratio: f64,
    /// Injection wavelength minus the resonance, in nm.
    pub delta_lambda_nm: f64,
    /// Half-width of the locking range at `PR = 1`, in nm.
    pub lock_width_nm: f64,
    /// Saturation constant `c_sat`; `I_sat = c_sat / (r_b - 1)`.
    pub sat_scale: f64,
    pub gain: f64,
    /// Spontaneous-emission noise amplitude `σ0`, in per-site intensity
    /// units. Calibrated so that total consistency at the defaults exceeds
    /// 0.99.
    pub noise_scale: f64,
    /// Weight `γ` of the global unitary coupling.
    pub mix_weight: f64,
    /// Carrier diffusion length in site units.
    pub diffusion_length: f64,
    /// Number of reservoir sites `m` (a perfect square).
    pub sites: usize,
    /// Number of read-out nodes `n`.
    pub nodes: usize,
}

impl Default for ReservoirParams {
    fn default() -> Self {
        ReservoirParams {
            bias_ratio: 1.5,
            power_ratio: 1.0,
            delta_lambda_nm: 0.0,
            lock_width_nm: 0.15,
            sat_scale: 1.0,
            gain: 1.0,
            noise_scale: 0.008,
            mix_weight: 0.5,
            diffusion_length: 2.0,
            sites: 1024,
            nodes: 350,
        }
    }
}

impl ReservoirParams {
    pub fn validate(&self) -> Result<()> {
        fn finite(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(field, format!("must be finite, got {v}")))
            }
        }
        finite("bias_ratio", self.bias_ratio)?;
        finite("power_ratio", self.power_ratio)?;
        finite("delta_lambda_nm", self.delta_lambda_nm)?;
        finite("lock_width_nm", self.lock_width_nm)?;
        finite("sat_scale", self.sat_scale)?;
        finite("gain", self.gain)?;
        finite("noise_scale", self.noise_scale)?;
        finite("diffusion_length", self.diffusion_length)?;
        if self.bias_ratio <= 1.0 {
            return Err(Error::domain(
                "bias_ratio",
                format!("device must be above threshold (> 1), got {}", self.bias_ratio),
            ));
        }
        if self.power_ratio < 0.0 {
            return Err(Error::domain(
                "power_ratio",
                format!("must be non-negative, got {}", self.power_ratio),
            ));
        }
        if self.lock_width_nm <= 0.0 {
            return Err(Error::domain("lock_width_nm", "must be positive"));
        }
        if self.sat_scale <= 0.0 {
            return Err(Error::domain("sat_scale", "must be positive"));
        }
        if self.gain <= 0.0 {
            return Err(Error::domain("gain", "must be positive"));
        }
        if self.noise_scale < 0.0 {
            return Err(Error::domain("noise_scale", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::domain("mix_weight", "must lie in [0, 1]"));
        }
        if self.diffusion_length < 0.0 {
            return Err(Error::domain("diffusion_length", "must be non-negative"));
        }
        let side = (self.sites as f64).sqrt().round() as usize;
        if self.sites == 0 || side * side != self.sites {
            return Err(Error::domain(
                "sites",
                format!("must be a positive perfect square, got {}", self.sites),
            ));
        }
        if self.nodes == 0 || self.nodes > self.sites {
            return Err(Error::domain(
                "nodes",
                format!("must lie in [1, sites = {}], got {}", self.sites, self.nodes),
            ));
        }
        Ok(())
    }

    /// `I_sat = c_sat / (r_b - 1)`.
    pub fn saturation_intensity(&self) -> f64 {
        self.sat_scale / (self.bias_ratio - 1.0)
    }

    /// Per-node noise standard deviation `σ0 / ((r_b - 1)(1 + PR))`.
    pub fn noise_sigma(&self) -> f64 {
        self.noise_scale / ((self.bias_ratio - 1.0) * (1.0 + self.power_ratio))
    }

    pub fn locking_efficiency(&self) -> f64 {
        locking_efficiency(self.delta_lambda_nm, self.power_ratio, self.lock_width_nm)
    }

    pub fn bias_current_ma(&self) -> f64 {
        self.bias_ratio * THRESHOLD_CURRENT_MA
    }

    pub fn injection_wavelength_nm(&self) -> f64 {
        RESONANCE_NM + self.delta_lambda_nm
    }

    pub fn injection_power_mw(&self) -> f64 {
        self.power_ratio * REFERENCE_POWER_MW
    }
}

/// Lorentzian locking efficiency whose width grows with `sqrt(PR)`.
pub fn locking_efficiency(delta_lambda_nm: f64, power_ratio: f64, lock_width_nm: f64) -> f64 {
    let w = lock_width_nm * power_ratio.max(MIN_POWER_RATIO).sqrt();
    let d = delta_lambda_nm / w;
    1.0 / (1.0 + d * d)
}

/// Single-site steady state without noise:
/// `η g P / (1 + P / I_sat) + (1 - η) f`.
#[inline]
pub fn saturable_response(power: f64, eta: f64, gain: f64, i_sat: f64, free_running: f64) -> f64 {
    eta * gain * power / (1.0 + power / i_sat) + (1.0 - eta) * free_running
}

/// Scales `W u` to total power `PR`. A zero field stays zero.
pub fn inject(field: &[Complex64], power_ratio: f64) -> Result<Vec<Complex64>> {
    if power_ratio < 0.0 || !power_ratio.is_finite() {
        return Err(Error::domain("power_ratio", "must be finite and non-negative"));
    }
    let total: f64 = field.iter().map(|z| z.norm_sqr()).sum();
    if !total.is_finite() {
        return Err(Error::Numeric("non-finite injected field".into()));
    }
    if total == 0.0 {
        return Ok(field.to_vec());
    }
    let s = (power_ratio / total).sqrt();
    Ok(field.iter().map(|z| z * s).collect())
}

/// Free-running emission profile: a few low-order cavity-mode-like
/// intensity lobes under a Gaussian envelope, normalized to total power 1.
pub fn free_running_pattern(sites: usize, seed: u64) -> Vec<f64> {
    let side = (sites as f64).sqrt().round() as usize;
    let mut rng = seed::rng(seed);
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0..4) as f64,
                rng.random_range(0..4) as f64,
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.2..1.0),
            )
        })
        .collect();
    let mut f: Vec<f64> = (0..sites)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            let x = 2.0 * (col as f64 + 0.5) / side as f64 - 1.0;
            let y = 2.0 * (row as f64 + 0.5) / side as f64 - 1.0;
            let envelope = (-(x * x + y * y) / 0.6).exp();
            let lobes: f64 = modes
                .iter()
                .map(|&(a, b, pa, pb, w)| {
                    let amp = (a * std::f64::consts::PI * x + pa).cos()
                        * (b * std::f64::consts::PI * y + pb).cos();
                    w * amp * amp
                })
                .sum();
            envelope * (lobes + 0.05)
        })
        .collect();
    let total: f64 = f.iter().sum();
    for v in &mut f {
        *v /= total;
    }
    f
}

/// The fixed subset of sites imaged onto the read-out mirrors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLayout {
    indices: Vec<usize>,
    sites: usize,
}

impl NodeLayout {
    /// Uniform random choice of `n` distinct sites, in ascending order.
    pub fn new(sites: usize, n: usize, seed: u64) -> Result<Self> {
        if n > sites {
            return Err(Error::domain(
                "nodes",
                format!("cannot sample {n} nodes from {sites} sites"),
            ));
        }
        let mut indices = if n == sites {
            (0..sites).collect()
        } else {
            index::sample(&mut seed::rng(seed), sites, n).into_vec()
        };
        indices.sort_unstable();
        Ok(NodeLayout { indices, sites })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn sample(&self, site_intensities: &[f64]) -> Result<Vec<f64>> {
        check_len("site intensities", self.sites, site_intensities.len())?;
        Ok(self.indices.iter().map(|&i| site_intensities[i]).collect())
    }
}

/// Node intensities of one input presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub node_intensities: Vec<f64>,
}

pub fn sample_nodes(site_intensities: &[f64], n: usize, layout_seed: u64) -> Result<ReservoirState> {
    let layout = NodeLayout::new(site_intensities.len(), n, layout_seed)?;
    Ok(ReservoirState {
        node_intensities: layout.sample(site_intensities)?,
    })
}

/// Adds i.i.d. Gaussian noise and clamps at zero.
pub fn add_noise(values: &mut [f64], sigma: f64, rng: &mut Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for v in values {
        *v = (*v + normal.sample(rng)).max(0.0);
    }
}
