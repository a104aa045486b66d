//! Parameter sweeps: evaluate one experiment at every grid point, in
//! parallel, with per-point seeds derived from the master seed.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::{mpsc, Arc};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Axis, ExperimentConfig};
use crate::encoder::{make_sequence, make_sequence_with_layout, LabeledSequence};
use crate::error::{Error, Result};
use crate::metrics::{analyze, consistency, nonlinearity_probe, ConsistencyReport, ProbeResult};
use crate::optics::{DeviceSeeds, Simulator};
use crate::seed::{self, tag};
use crate::state::StateCollectMatrix;
use crate::training::{evaluate, train_all_classes, Evaluation, TrainedReadout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Train,
    Consistency,
    Dimensionality,
    Probe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Train => "train",
            Experiment::Consistency => "consistency",
            Experiment::Dimensionality => "dimensionality",
            Experiment::Probe => "probe",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Experiment::Train),
            "consistency" => Ok(Experiment::Consistency),
            "dimensionality" => Ok(Experiment::Dimensionality),
            "probe" => Ok(Experiment::Probe),
            other => Err(Error::Config {
                line: None,
                field: Some("experiment".into()),
                message: format!("unknown experiment `{other}`"),
            }),
        }
    }
}

/// One line of a sweep table. Parameter columns always hold the effective
/// value at the point; metric columns are empty when not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub segment: String,
    pub point: usize,
    pub repetition: usize,
    pub seed: u64,
    pub device_seed: u64,
    pub bias_ratio: f64,
    pub power_ratio: f64,
    pub delta_lambda_nm: f64,
    pub ring_fraction: f64,
    pub n_bits: u32,
    pub noise_scale: f64,
    pub vcsel_on: bool,
    pub nmse: Option<f64>,
    pub ser: Option<f64>,
    pub c_total: Option<f64>,
    pub c_node_mean: Option<f64>,
    pub k_min: Option<usize>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub error: Option<String>,
    /// Kept out of the result table so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl ResultRow {
    /// Value of a parameter or metric column by name.
    pub fn value(&self, column: &str) -> Option<f64> {
        match column {
            "bias_ratio" => Some(self.bias_ratio),
            "power_ratio" => Some(self.power_ratio),
            "delta_lambda_nm" => Some(self.delta_lambda_nm),
            "ring_fraction" => Some(self.ring_fraction),
            "n_bits" => Some(self.n_bits as f64),
            "noise_scale" => Some(self.noise_scale),
            "vcsel_on" => Some(f64::from(u8::from(self.vcsel_on))),
            "nmse" => self.nmse,
            "ser" => self.ser,
            "c_total" => self.c_total,
            "c_node_mean" => self.c_node_mean,
            "k_min" => self.k_min.map(|k| k as f64),
            "D" => self.d,
            "seed" => Some(self.seed as f64),
            _ => None,
        }
    }
}

pub const PARAM_COLUMNS: &[&str] = &[
    "bias_ratio",
    "power_ratio",
    "delta_lambda_nm",
    "ring_fraction",
    "n_bits",
    "noise_scale",
    "vcsel_on",
];

pub const METRIC_COLUMNS: &[&str] = &["nmse", "ser", "c_total", "c_node_mean", "k_min", "D"];

/// Cartesian product of the axes, first axis varying slowest. No axes
/// yields a single empty point.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<(String, f64)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((axis.name.clone(), v));
                    p
                })
            })
            .collect()
    })
}

/// Seed of sweep point `point` at repetition `rep`.
pub fn point_seed(master: u64, point: usize, rep: usize) -> u64 {
    seed::derive(master, &[tag::POINT, point as u64, rep as u64])
}

/// Seed of the physical device used by repetition `rep`. Shared by all
/// points of a sweep so that parameter changes act on the same device.
pub fn device_seed(master: u64, rep: usize) -> u64 {
    seed::derive(master, &[tag::DEVICE, rep as u64])
}

#[derive(Debug, Default)]
struct PointMetrics {
    nmse: Option<f64>,
    ser: Option<f64>,
    c_total: Option<f64>,
    c_node_mean: Option<f64>,
    k_min: Option<usize>,
    d: Option<f64>,
}

/// The simulated device of a sweep point.
pub fn point_system(config: &ExperimentConfig, device: u64) -> Result<Simulator> {
    config.validate()?;
    Simulator::new(
        config.reservoir.clone(),
        config.encoder.grid(),
        DeviceSeeds::from_device_seed(device),
        config.device.model(),
    )
}

/// Input sequence of a sweep point.
pub fn point_sequence(config: &ExperimentConfig, seed: u64) -> Result<LabeledSequence> {
    let enc = &config.encoder;
    make_sequence(
        enc.grid(),
        enc.n_bits,
        enc.sequence_length,
        enc.ring_fraction,
        seed::derive(seed, &[tag::SEQUENCE]),
    )
}

/// Trains all one-vs-all readouts of a point and evaluates them on a fresh
/// test sequence with its own noise.
pub fn train_point(config: &ExperimentConfig, seed: u64, device: u64) -> Result<(TrainedReadout, Evaluation)> {
    let system = point_system(config, device)?;
    let train = point_sequence(config, seed)?;
    let test = make_sequence_with_layout(
        Arc::new(train.layout().clone()),
        config.encoder.test_length,
        seed::derive(seed, &[tag::TEST_SEQUENCE]),
    )?;
    let options = config.training.options(seed::derive(seed, &[tag::TRAINING]));
    let trained = train_all_classes(&system, &train, &options)?;
    let mut noise = seed::rng(seed::derive(seed, &[tag::NOISE, u64::MAX]));
    let eval = evaluate(&trained.records, &system, &test, Some(&mut noise))?;
    Ok((trained, eval))
}

/// Noisy state-collect matrix of a point.
pub fn point_states(config: &ExperimentConfig, seed: u64, device: u64) -> Result<StateCollectMatrix> {
    let system = point_system(config, device)?;
    let seq = point_sequence(config, seed)?;
    let mut noise = seed::rng(seed::derive(seed, &[tag::NOISE]));
    system.respond(&seq, Some(&mut noise))
}

pub fn consistency_point(config: &ExperimentConfig, seed: u64, device: u64) -> Result<ConsistencyReport> {
    let system = point_system(config, device)?;
    let seq = point_sequence(config, seed)?;
    consistency(&system, &seq, config.metrics.consistency_repetitions, seed)
}

pub fn probe_point(config: &ExperimentConfig, device: u64) -> Result<ProbeResult> {
    let system = point_system(config, device)?;
    nonlinearity_probe(&system, config.metrics.probe_bits, config.encoder.ring_fraction)
}

fn evaluate_point(config: &ExperimentConfig, experiment: Experiment, seed: u64, device: u64) -> Result<PointMetrics> {
    let mut out = PointMetrics::default();
    match experiment {
        Experiment::Train => {
            let (trained, eval) = train_point(config, seed, device)?;
            out.nmse = Some(trained.mean_nmse);
            out.ser = Some(eval.ser);
        }
        Experiment::Consistency => {
            let report = consistency_point(config, seed, device)?;
            out.c_total = Some(report.c_total);
            out.c_node_mean = Some(report.mean_c_node());
        }
        Experiment::Dimensionality => {
            let m = point_states(config, seed, device)?;
            out.k_min = Some(analyze(&m, config.metrics.covariance)?.k_min);
        }
        Experiment::Probe => {
            out.d = Some(probe_point(config, device)?.d);
        }
    }
    Ok(out)
}

/// A sweep job: one grid point at one repetition.
#[derive(Debug, Clone)]
pub struct Job {
    pub segment: String,
    pub point: usize,
    pub repetition: usize,
    pub assignments: Vec<(String, f64)>,
}

/// Enumerates jobs for named segments of axes, numbering points globally.
pub fn plan(segments: &[(String, Vec<Axis>)], repetitions: usize) -> Vec<Job> {
    let mut jobs = Vec::new();
    let mut point = 0;
    for (name, axes) in segments {
        for assignments in grid_points(axes) {
            for repetition in 0..repetitions {
                jobs.push(Job {
                    segment: name.clone(),
                    point,
                    repetition,
                    assignments: assignments.clone(),
                });
            }
            point += 1;
        }
    }
    jobs
}

/// Evaluates one job in isolation.
pub fn run_job(config: &ExperimentConfig, experiment: Experiment, job: &Job) -> ResultRow {
    let master = config.run.master_seed;
    let seed = point_seed(master, job.point, job.repetition);
    let device = device_seed(master, job.repetition);
    let start = Instant::now();
    let mut cfg = config.clone();
    let applied: Result<()> = job.assignments.iter().try_for_each(|(k, v)| cfg.set(k, *v));
    let metrics = applied.and_then(|_| evaluate_point(&cfg, experiment, seed, device));
    let (m, error) = match metrics {
        Ok(m) => (m, None),
        Err(e) => (PointMetrics::default(), Some(e.to_string())),
    };
    ResultRow {
        segment: job.segment.clone(),
        point: job.point,
        repetition: job.repetition,
        seed,
        device_seed: device,
        bias_ratio: cfg.reservoir.bias_ratio,
        power_ratio: cfg.reservoir.power_ratio,
        delta_lambda_nm: cfg.reservoir.delta_lambda_nm,
        ring_fraction: cfg.encoder.ring_fraction,
        n_bits: cfg.encoder.n_bits,
        noise_scale: cfg.reservoir.noise_scale,
        vcsel_on: cfg.device.vcsel_on,
        nmse: m.nmse,
        ser: m.ser,
        c_total: m.c_total,
        c_node_mean: m.c_node_mean,
        k_min: m.k_min,
        d: m.d,
        error,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Receives finished rows in job order.
pub trait RowSink {
    fn accept(&mut self, row: &ResultRow) -> Result<()>;
}

impl RowSink for Vec<ResultRow> {
    fn accept(&mut self, row: &ResultRow) -> Result<()> {
        self.push(row.clone());
        Ok(())
    }
}

/// Runs jobs on a worker pool. Rows reach `sink` strictly in job order as
/// soon as all earlier jobs are done, so a partial table is always a
/// prefix of the full one.
pub fn execute(
    config: &ExperimentConfig,
    experiment: Experiment,
    jobs: &[Job],
    sink: &mut dyn RowSink,
) -> Result<Vec<ResultRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.workers)
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<(usize, ResultRow)>();
    let mut rows = Vec::with_capacity(jobs.len());
    pool.in_place_scope(|scope| -> Result<()> {
        for (i, job) in jobs.iter().enumerate() {
            let tx = tx.clone();
            scope.spawn(move |_| {
                let _ = tx.send((i, run_job(config, experiment, job)));
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, row) in rx.iter() {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&next) {
                sink.accept(&row)?;
                rows.push(row);
                next += 1;
            }
        }
        Ok(())
    })?;
    Ok(rows)
}

/// Sweeps the axes of `config.sweep` for one experiment.
pub fn run_sweep(config: &ExperimentConfig, experiment: Experiment, sink: &mut dyn RowSink) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let jobs = plan(&[("custom".to_string(), config.sweep.axes.clone())], config.run.repetitions);
    execute(config, experiment, &jobs, sink)
}
