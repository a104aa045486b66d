use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coupling::CouplingOperator;
use super::transmission::TransmissionMatrix;
use super::vcsel::{
    add_noise, free_running_pattern, inject, saturable_response, NodeLayout, ReservoirParams,
    ReservoirState,
};
use crate::encoder::{Grid, HeaderLayout, LabeledSequence, Region};
use crate::error::{check_len, Error, Result};
use crate::seed::{self, tag, Rng};
use crate::state::{Provenance, StateCollectMatrix};

/// How site intensities are formed from the injected field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseModel {
    /// Injection-locked VCSEL: coupling, saturable gain and free-running
    /// background.
    #[default]
    Saturable,
    /// Switched-off device acting as a passive scatterer: `|W u|²` at fixed
    /// scale, no coupling, no saturation, no free-running term.
    PassThrough,
    /// Incoherent intensity transmission `Σ_j |(D W)_ij|² u_j`, linear in
    /// `u`. Used to check that the nonlinearity probe vanishes on a linear
    /// system.
    Linear,
}

/// Seeds of every stochastic element of one physical device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSeeds {
    pub transmission: u64,
    pub coupling: u64,
    pub free_running: u64,
    pub layout: u64,
}

impl DeviceSeeds {
    pub fn from_device_seed(device_seed: u64) -> Self {
        DeviceSeeds {
            transmission: seed::derive(device_seed, &[tag::TRANSMISSION]),
            coupling: seed::derive(device_seed, &[tag::COUPLING]),
            free_running: seed::derive(device_seed, &[tag::FREE_RUNNING]),
            layout: seed::derive(device_seed, &[tag::LAYOUT]),
        }
    }
}

/// Precomputed `W · 1_region` for every region of a header layout. By
/// linearity the field of any header is the ring field plus the fields of
/// its active sectors.
struct RegionBasis {
    ring: Vec<Complex64>,
    sectors: Vec<Vec<Complex64>>,
    incoherent: Option<(Vec<f64>, Vec<Vec<f64>>)>,
}

/// A configured, immutable reservoir. Cheap to share across threads; every
/// noisy evaluation takes an explicit random stream.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: ReservoirParams,
    seeds: DeviceSeeds,
    model: ResponseModel,
    grid: Grid,
    transmission: Arc<TransmissionMatrix>,
    coupling: Arc<CouplingOperator>,
    free_running: Arc<Vec<f64>>,
    nodes: Arc<NodeLayout>,
    /// `|(D W)_ij|²`, column-major, only for [`ResponseModel::Linear`].
    incoherent: Option<Arc<Vec<f64>>>,
}

impl Simulator {
    pub fn new(
        params: ReservoirParams,
        grid: Grid,
        seeds: DeviceSeeds,
        model: ResponseModel,
    ) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        let p = grid.disk_pixel_count();
        let transmission = Arc::new(TransmissionMatrix::build(params.sites, p, seeds.transmission)?);
        let coupling = Arc::new(CouplingOperator::new(
            params.sites,
            params.diffusion_length,
            params.mix_weight,
            seeds.coupling,
        )?);
        let free_running = Arc::new(free_running_pattern(params.sites, seeds.free_running));
        let nodes = Arc::new(NodeLayout::new(params.sites, params.nodes, seeds.layout)?);
        let mut sim = Simulator {
            params,
            seeds,
            model,
            grid,
            transmission,
            coupling,
            free_running,
            nodes,
            incoherent: None,
        };
        sim.refresh_incoherent();
        Ok(sim)
    }

    /// Same device under different operating parameters. Structural parts
    /// are rebuilt only when the fields they depend on change.
    pub fn with_params(&self, params: ReservoirParams) -> Result<Self> {
        params.validate()?;
        if params.sites != self.params.sites {
            return Simulator::new(params, self.grid, self.seeds, self.model);
        }
        let mut sim = self.clone();
        if params.mix_weight != self.params.mix_weight
            || params.diffusion_length != self.params.diffusion_length
        {
            sim.coupling = Arc::new(CouplingOperator::new(
                params.sites,
                params.diffusion_length,
                params.mix_weight,
                self.seeds.coupling,
            )?);
            sim.incoherent = None;
        }
        if params.nodes != self.params.nodes {
            sim.nodes = Arc::new(NodeLayout::new(params.sites, params.nodes, self.seeds.layout)?);
        }
        sim.params = params;
        sim.refresh_incoherent();
        Ok(sim)
    }

    pub fn with_model(&self, model: ResponseModel) -> Self {
        let mut sim = self.clone();
        sim.model = model;
        sim.refresh_incoherent();
        sim
    }

    fn refresh_incoherent(&mut self) {
        if self.model != ResponseModel::Linear {
            self.incoherent = None;
            return;
        }
        if self.incoherent.is_some() {
            return;
        }
        let m = self.params.sites;
        let p = self.transmission.cols();
        let columns: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|j| {
                self.coupling
                    .apply(self.transmission.column(j))
                    .expect("site count matches")
                    .iter()
                    .map(|z| z.norm_sqr())
                    .collect()
            })
            .collect();
        let mut flat = Vec::with_capacity(m * p);
        for c in columns {
            flat.extend(c);
        }
        self.incoherent = Some(Arc::new(flat));
    }

    pub fn params(&self) -> &ReservoirParams {
        &self.params
    }

    pub fn seeds(&self) -> DeviceSeeds {
        self.seeds
    }

    pub fn model(&self) -> ResponseModel {
        self.model
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn transmission(&self) -> &TransmissionMatrix {
        &self.transmission
    }

    pub fn coupling(&self) -> &CouplingOperator {
        &self.coupling
    }

    pub fn free_running(&self) -> &[f64] {
        &self.free_running
    }

    pub fn node_layout(&self) -> &NodeLayout {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn site_count(&self) -> usize {
        self.params.sites
    }

    pub fn input_len(&self) -> usize {
        self.transmission.cols()
    }

    /// Steady state of the locked VCSEL for an already injected field `a`
    /// (total power `PR`), optionally with spontaneous-emission noise.
    /// Intensities are in units of the mean per-site free-running power.
    pub fn vcsel_steady_state(&self, a: &[Complex64], noise: Option<&mut Rng>) -> Result<Vec<f64>> {
        check_len("injected field", self.params.sites, a.len())?;
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite injected field".into()));
        }
        let mut x = self.saturable_sites(a)?;
        if let Some(rng) = noise {
            add_noise(&mut x, self.params.noise_sigma(), rng);
        }
        Ok(x)
    }

    fn saturable_sites(&self, a: &[Complex64]) -> Result<Vec<f64>> {
        let m = self.params.sites as f64;
        let b = self.coupling.apply(a)?;
        let eta = self.params.locking_efficiency();
        let g = self.params.gain;
        let i_sat = self.params.saturation_intensity();
        Ok(b.iter()
            .zip(self.free_running.iter())
            .map(|(z, &f)| saturable_response(m * z.norm_sqr(), eta, g, i_sat, m * f))
            .collect())
    }

    /// Noiseless site intensities from the raw fiber output `W u`.
    fn sites_from_wu(&self, wu: &[Complex64]) -> Result<Vec<f64>> {
        match self.model {
            ResponseModel::Saturable => {
                let a = inject(wu, self.params.power_ratio)?;
                self.saturable_sites(&a)
            }
            ResponseModel::PassThrough => {
                let scale = self.params.gain * self.params.power_ratio;
                Ok(wu.iter().map(|z| scale * z.norm_sqr()).collect())
            }
            ResponseModel::Linear => Err(Error::Numeric(
                "linear model needs the input vector, not its field".into(),
            )),
        }
    }

    fn linear_sites(&self, cols: impl Iterator<Item = usize>) -> Vec<f64> {
        let m = self.params.sites;
        let inc = self.incoherent.as_ref().expect("linear model precomputed");
        let scale = self.params.gain * self.params.power_ratio;
        let mut out = vec![0.0; m];
        for j in cols {
            for (o, v) in out.iter_mut().zip(&inc[j * m..(j + 1) * m]) {
                *o += scale * v;
            }
        }
        out
    }

    /// Site intensities for a Boolean input vector.
    pub fn site_response(&self, u: &[bool], noise: Option<&mut Rng>) -> Result<Vec<f64>> {
        check_len("input vector u", self.input_len(), u.len())?;
        let mut x = match self.model {
            ResponseModel::Linear => {
                self.linear_sites(u.iter().enumerate().filter_map(|(j, &on)| on.then_some(j)))
            }
            _ => self.sites_from_wu(&self.transmission.apply(u)?)?,
        };
        if let Some(rng) = noise {
            add_noise(&mut x, self.params.noise_sigma(), rng);
        }
        Ok(x)
    }

    /// Node intensities for one input vector.
    pub fn node_response(&self, u: &[bool], noise: Option<&mut Rng>) -> Result<ReservoirState> {
        let sites = self.site_response(u, None)?;
        let mut x = self.nodes.sample(&sites)?;
        if let Some(rng) = noise {
            add_noise(&mut x, self.params.noise_sigma(), rng);
        }
        Ok(ReservoirState { node_intensities: x })
    }

    fn region_basis(&self, layout: &HeaderLayout) -> Result<RegionBasis> {
        check_len("header layout pixels", self.input_len(), layout.len())?;
        let ring_idx = layout.region_indices(Region::Ring);
        let sector_idx: Vec<Vec<usize>> = (0..layout.n_bits())
            .map(|j| layout.region_indices(Region::Sector(j)))
            .collect();
        let ring = self.transmission.sum_columns(ring_idx.iter().copied());
        let sectors = sector_idx
            .iter()
            .map(|idx| self.transmission.sum_columns(idx.iter().copied()))
            .collect();
        let incoherent = (self.model == ResponseModel::Linear).then(|| {
            (
                self.linear_sites(ring_idx.iter().copied()),
                sector_idx
                    .iter()
                    .map(|idx| self.linear_sites(idx.iter().copied()))
                    .collect(),
            )
        });
        Ok(RegionBasis {
            ring,
            sectors,
            incoherent,
        })
    }

    fn class_sites(&self, basis: &RegionBasis, class_id: u32) -> Result<Vec<f64>> {
        if let Some((ring, sectors)) = &basis.incoherent {
            let mut x = ring.clone();
            for (j, s) in sectors.iter().enumerate() {
                if (class_id >> j) & 1 == 1 {
                    for (o, v) in x.iter_mut().zip(s) {
                        *o += v;
                    }
                }
            }
            return Ok(x);
        }
        let mut wu = basis.ring.clone();
        for (j, s) in basis.sectors.iter().enumerate() {
            if (class_id >> j) & 1 == 1 {
                for (o, v) in wu.iter_mut().zip(s) {
                    *o += v;
                }
            }
        }
        self.sites_from_wu(&wu)
    }

    /// Noiseless site intensities of each requested header class.
    pub fn class_site_responses(
        &self,
        layout: &HeaderLayout,
        classes: &[u32],
    ) -> Result<Vec<Vec<f64>>> {
        for &c in classes {
            layout.check_class(c)?;
        }
        let basis = self.region_basis(layout)?;
        classes
            .par_iter()
            .map(|&c| self.class_sites(&basis, c))
            .collect()
    }

    /// Noiseless node responses keyed by class, for the classes present in
    /// the sequence.
    pub fn class_node_responses(&self, seq: &LabeledSequence) -> Result<BTreeMap<u32, Vec<f64>>> {
        let mut classes = seq.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        let sites = self.class_site_responses(seq.layout(), &classes)?;
        classes
            .into_iter()
            .zip(sites)
            .map(|(c, s)| Ok((c, self.nodes.sample(&s)?)))
            .collect()
    }

    pub fn provenance(&self, seq: &LabeledSequence) -> Provenance {
        Provenance::new(seq.seed, &(&self.params, &self.seeds, self.model))
    }

    /// State-collect matrix of the sequence. Noise, when enabled, is drawn
    /// from `noise` row by row.
    pub fn respond(&self, seq: &LabeledSequence, noise: Option<&mut Rng>) -> Result<StateCollectMatrix> {
        let responses = self.class_node_responses(seq)?;
        self.assemble(seq, &responses, noise)
    }

    /// Builds `M` from precomputed class responses plus fresh noise.
    pub fn assemble(
        &self,
        seq: &LabeledSequence,
        responses: &BTreeMap<u32, Vec<f64>>,
        mut noise: Option<&mut Rng>,
    ) -> Result<StateCollectMatrix> {
        let t = seq.len();
        let n = self.node_count();
        let sigma = self.params.noise_sigma();
        let mut data = DMatrix::<f64>::zeros(t, n);
        let mut row = vec![0.0; n];
        for (i, label) in seq.labels.iter().enumerate() {
            let base = responses
                .get(label)
                .ok_or_else(|| Error::Numeric(format!("missing response for class {label}")))?;
            row.copy_from_slice(base);
            if let Some(rng) = noise.as_deref_mut() {
                add_noise(&mut row, sigma, rng);
            }
            for (j, v) in row.iter().enumerate() {
                data[(i, j)] = *v;
            }
        }
        StateCollectMatrix::new(data, self.provenance(seq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{make_header_pattern, make_sequence, pattern_to_vector};

    fn small_params() -> ReservoirParams {
        ReservoirParams {
            sites: 256,
            nodes: 100,
            ..Default::default()
        }
    }

    fn small_grid() -> Grid {
        Grid::new(32, 15.0).unwrap()
    }

    fn sim(model: ResponseModel) -> Simulator {
        Simulator::new(small_params(), small_grid(), DeviceSeeds::from_device_seed(1), model).unwrap()
    }

    #[test]
    fn zero_injection_gives_free_running_emission() {
        let s = sim(ResponseModel::Saturable);
        let params = ReservoirParams {
            delta_lambda_nm: 0.2,
            noise_scale: 0.0,
            ..small_params()
        };
        let s = s.with_params(params).unwrap();
        let eta = s.params().locking_efficiency();
        let x = s
            .vcsel_steady_state(&vec![Complex64::new(0.0, 0.0); 256], None)
            .unwrap();
        for (xi, fi) in x.iter().zip(s.free_running()) {
            assert!((xi - (1.0 - eta) * 256.0 * fi).abs() < 1e-12);
        }
    }

    #[test]
    fn small_signal_limit_is_linear_in_power() {
        let params = ReservoirParams {
            mix_weight: 0.0,
            diffusion_length: 0.0,
            noise_scale: 0.0,
            power_ratio: 1e-4,
            gain: 1.3,
            ..small_params()
        };
        let s = Simulator::new(params, small_grid(), DeviceSeeds::from_device_seed(2), ResponseModel::Saturable)
            .unwrap();
        let u = pattern_to_vector(&make_header_pattern(small_grid(), 3, 5, 0.5).unwrap());
        let wu = s.transmission().apply(&u).unwrap();
        let a = inject(&wu, 1e-4).unwrap();
        let x = s.vcsel_steady_state(&a, None).unwrap();
        for (xi, ai) in x.iter().zip(&a) {
            let linear = 1.3 * 256.0 * ai.norm_sqr();
            assert!((xi - linear).abs() <= 0.01 * linear + 1e-15);
        }
    }

    #[test]
    fn region_basis_matches_direct_path() {
        for model in [ResponseModel::Saturable, ResponseModel::PassThrough, ResponseModel::Linear] {
            let s = sim(model);
            let layout = HeaderLayout::new(small_grid(), 3, 0.4).unwrap();
            let classes: Vec<u32> = (0..8).collect();
            let fast = s.class_site_responses(&layout, &classes).unwrap();
            for c in classes {
                let u = pattern_to_vector(&layout.pattern(c).unwrap());
                let direct = s.site_response(&u, None).unwrap();
                for (a, b) in fast[c as usize].iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{model:?} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn noiseless_respond_is_deterministic_and_pure() {
        let params = ReservoirParams { noise_scale: 0.0, ..small_params() };
        let s = sim(ResponseModel::Saturable).with_params(params).unwrap();
        let seq = make_sequence(small_grid(), 3, 50, 0.5, 9).unwrap();
        let a = s.respond(&seq, None).unwrap();
        let mut rng = seed::rng(4);
        let b = s.respond(&seq, Some(&mut rng)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps(), 50);
        assert_eq!(a.nodes(), 100);
        for t1 in 0..50 {
            for t2 in 0..50 {
                if seq.labels[t1] == seq.labels[t2] {
                    assert_eq!(a.row(t1), a.row(t2));
                }
            }
        }
    }

    #[test]
    fn single_step_matches_single_shot() {
        let s = sim(ResponseModel::Saturable);
        let seq = make_sequence(small_grid(), 3, 1, 0.5, 3).unwrap();
        let m = s.respond(&seq, None).unwrap();
        let u = pattern_to_vector(&seq.patterns[0]);
        let shot = s.node_response(&u, None).unwrap();
        for (a, b) in m.row(0).iter().zip(&shot.node_intensities) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn monotone_in_power_ratio_at_resonance() {
        let s = sim(ResponseModel::Saturable);
        let u = pattern_to_vector(&make_header_pattern(small_grid(), 3, 6, 0.5).unwrap());
        let mut prev: Option<Vec<f64>> = None;
        for k in 0..20 {
            let pr = 0.05 + 0.2 * k as f64;
            let params = ReservoirParams { power_ratio: pr, noise_scale: 0.0, ..small_params() };
            let x = s.with_params(params).unwrap().site_response(&u, None).unwrap();
            if let Some(p) = &prev {
                assert!(x.iter().zip(p).all(|(a, b)| a >= b));
            }
            prev = Some(x);
        }
    }

    #[test]
    fn noise_is_clamped_non_negative() {
        let params = ReservoirParams { noise_scale: 5.0, ..small_params() };
        let s = sim(ResponseModel::Saturable).with_params(params).unwrap();
        let seq = make_sequence(small_grid(), 3, 20, 0.5, 1).unwrap();
        let mut rng = seed::rng(0);
        let m = s.respond(&seq, Some(&mut rng)).unwrap();
        assert!(m.matrix().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rejects_non_finite_field() {
        let s = sim(ResponseModel::Saturable);
        let mut a = vec![Complex64::new(0.0, 0.0); 256];
        a[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(s.vcsel_steady_state(&a, None), Err(Error::Numeric(_))));
    }
}
