//! Superposition test: compare the sum of single-bit responses with the
//! all-bits response. A system linear in its input gives a zero map.

use serde::{Deserialize, Serialize};

use crate::encoder::HeaderLayout;
use crate::error::Result;
use crate::optics::{ReservoirParams, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Per-site `|Σ_j x(e_j) − x(1…1) − (N−1)·x(0…0)|`.
    pub deviation_map: Vec<f64>,
    /// Mean of the map over the mean all-bits response.
    pub d: f64,
}

/// Noise is disabled for the probe. The `(N − 1)·x(0)` term removes the
/// always-on ring and free-running background that every header response
/// contains.
pub fn nonlinearity_probe(system: &Simulator, n_bits: u32, ring_fraction: f64) -> Result<ProbeResult> {
    let quiet = system.with_params(ReservoirParams {
        noise_scale: 0.0,
        ..system.params().clone()
    })?;
    let layout = HeaderLayout::new(system.grid(), n_bits, ring_fraction)?;
    let all = (1u32 << n_bits) - 1;
    let mut classes = vec![0, all];
    classes.extend((0..n_bits).map(|j| 1u32 << j));
    let x = quiet.class_site_responses(&layout, &classes)?;
    let (zero, full, singles) = (&x[0], &x[1], &x[2..]);

    let map: Vec<f64> = (0..zero.len())
        .map(|i| {
            let sum: f64 = singles.iter().map(|s| s[i]).sum();
            (sum - full[i] - (n_bits as f64 - 1.0) * zero[i]).abs()
        })
        .collect();
    let mean_map = map.iter().sum::<f64>() / map.len() as f64;
    let mean_full = full.iter().sum::<f64>() / full.len() as f64;
    let d = if mean_full > 0.0 { mean_map / mean_full } else { 0.0 };
    Ok(ProbeResult { deviation_map: map, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::Grid;
    use crate::optics::{DeviceSeeds, ResponseModel};

    fn params() -> ReservoirParams {
        ReservoirParams { sites: 256, nodes: 64, ..Default::default() }
    }

    #[test]
    fn linear_model_has_zero_deviation() {
        let sim = Simulator::new(params(), Grid::new(32, 15.0).unwrap(), DeviceSeeds::from_device_seed(3), ResponseModel::Linear)
            .unwrap();
        let probe = nonlinearity_probe(&sim, 3, 0.5).unwrap();
        assert!(probe.d.abs() < 1e-9, "D = {}", probe.d);
        assert_eq!(probe.deviation_map.len(), 256);
    }

    /// One saturable site driven by intensities `p_j` of three bits on top
    /// of a ring intensity `p_r`, as additive powers: the probe value in
    /// closed form is non-decreasing when the input power doubles, up to
    /// the saturation knee (total drive about `I_sat`). Far beyond it every
    /// response pins at `g·I_sat` and the deviation shrinks again.
    #[test]
    fn single_site_oracle_non_decreasing_in_power() {
        let f = |p: f64| p / (1.0 + p / 2.0);
        let probe = |scale: f64| {
            let (pr, p) = (0.6 * scale, [0.3 * scale, 0.5 * scale, 0.2 * scale]);
            let singles: f64 = p.iter().map(|&q| f(pr + q)).sum();
            let full = f(pr + p.iter().sum::<f64>());
            (singles - full - 2.0 * f(pr)).abs() / full
        };
        let mut prev = 0.0;
        for k in 0..6 {
            let d = probe(2f64.powi(k - 4));
            assert!(d >= prev);
            prev = d;
        }
    }

    /// Same site at two bias ratios: a lower `I_sat` compresses the
    /// response, so the probe value grows.
    #[test]
    fn single_site_oracle_grows_with_bias() {
        let probe = |i_sat: f64| {
            let f = |p: f64| p / (1.0 + p / i_sat);
            let (pr, p) = (0.5, [0.3, 0.5, 0.2]);
            let singles: f64 = p.iter().map(|&q| f(pr + q)).sum();
            let full = f(pr + p.iter().sum::<f64>());
            (singles - full - 2.0 * f(pr)).abs() / full
        };
        let low = ReservoirParams { bias_ratio: 1.1, ..Default::default() };
        let high = ReservoirParams { bias_ratio: 1.5, ..Default::default() };
        assert!(probe(high.saturation_intensity()) > probe(low.saturation_intensity()));
    }
}
