//! Consistency: how reproducibly the system answers repeated presentations
//! of the same input sequence.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::LabeledSequence;
use crate::error::{check_len, Error, Result};
use crate::optics::Simulator;
use crate::readout::{detect, BooleanMask};
use crate::seed::{self, tag};
use crate::state::StateCollectMatrix;

/// Pearson correlation matrix of `R` equally long traces.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: DMatrix<f64>,
    /// Traces with zero variance; their correlations are reported as 0.
    pub degenerate: Vec<usize>,
}

impl CorrelationMatrix {
    /// Mean of the strictly upper triangle.
    pub fn upper_mean(&self) -> f64 {
        let r = self.values.nrows();
        let mut sum = 0.0;
        for i in 0..r {
            for j in (i + 1)..r {
                sum += self.values[(i, j)];
            }
        }
        sum / (r * (r - 1) / 2) as f64
    }
}

pub fn correlation_matrix(traces: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    let r = traces.len();
    if r < 2 {
        return Err(Error::domain("R", "correlation needs at least two traces"));
    }
    let t = traces[0].len();
    for tr in traces {
        check_len("trace length", t, tr.len())?;
    }
    if t == 0 {
        return Err(Error::domain("T", "traces must be non-empty"));
    }
    let centered: Vec<(Vec<f64>, f64)> = traces
        .iter()
        .map(|tr| {
            let mean = tr.iter().sum::<f64>() / t as f64;
            let c: Vec<f64> = tr.iter().map(|v| v - mean).collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            (c, norm)
        })
        .collect();
    // Relative to the trace magnitude so round-off does not pass as signal.
    let degenerate: Vec<usize> = centered
        .iter()
        .zip(traces)
        .enumerate()
        .filter(|(_, ((_, norm), tr))| {
            let scale = tr.iter().map(|v| v.abs()).fold(0.0, f64::max) * (t as f64).sqrt();
            *norm <= 1e-14 * scale || *norm == 0.0
        })
        .map(|(i, _)| i)
        .collect();
    let mut values = DMatrix::<f64>::identity(r, r);
    for i in 0..r {
        for j in (i + 1)..r {
            let v = if degenerate.contains(&i) || degenerate.contains(&j) {
                0.0
            } else {
                let (a, na) = &centered[i];
                let (b, nb) = &centered[j];
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot / (na * nb)).clamp(-1.0, 1.0)
            };
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(CorrelationMatrix { values, degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub repetitions: usize,
    /// Consistency of the all-mirrors-on detector trace.
    pub c_total: f64,
    /// Consistency of every single-mirror trace.
    pub c_node: Vec<f64>,
    /// Nodes whose response did not vary; reported with consistency 0.
    pub degenerate_nodes: Vec<usize>,
    #[serde(skip)]
    pub total_matrix: Option<DMatrix<f64>>,
}

impl ConsistencyReport {
    pub fn mean_c_node(&self) -> f64 {
        self.c_node.iter().sum::<f64>() / self.c_node.len() as f64
    }
}

/// `R` noisy presentations of the sequence, each with its own noise stream
/// derived from `seed`.
pub fn repeated_responses(
    system: &Simulator,
    seq: &LabeledSequence,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<StateCollectMatrix>> {
    if repetitions < 2 {
        return Err(Error::domain("repetitions", "consistency needs R >= 2"));
    }
    let responses = system.class_node_responses(seq)?;
    (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(seed::derive(seed, &[tag::NOISE, r as u64]));
            system.assemble(seq, &responses, Some(&mut rng))
        })
        .collect()
}

/// Total and node-resolved consistency from one set of repetitions.
pub fn consistency(
    system: &Simulator,
    seq: &LabeledSequence,
    repetitions: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    let reps = repeated_responses(system, seq, repetitions, seed)?;
    consistency_from(&reps)
}

pub fn consistency_from(reps: &[StateCollectMatrix]) -> Result<ConsistencyReport> {
    if reps.len() < 2 {
        return Err(Error::domain("repetitions", "consistency needs R >= 2"));
    }
    let n = reps[0].nodes();
    let totals = reps
        .iter()
        .map(|m| detect(m, &BooleanMask::ones(n)))
        .collect::<Result<Vec<_>>>()?;
    let total = correlation_matrix(&totals)?;
    let per_node = (0..n)
        .into_par_iter()
        .map(|i| {
            let traces: Vec<Vec<f64>> = reps.iter().map(|m| m.column(i).to_vec()).collect();
            correlation_matrix(&traces).map(|c| (c.upper_mean(), !c.degenerate.is_empty()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConsistencyReport {
        repetitions: reps.len(),
        c_total: total.upper_mean(),
        c_node: per_node.iter().map(|(c, _)| *c).collect(),
        degenerate_nodes: per_node
            .iter()
            .enumerate()
            .filter_map(|(i, (_, d))| d.then_some(i))
            .collect(),
        total_matrix: Some(total.values),
    })
}

pub fn consistency_total(system: &Simulator, seq: &LabeledSequence, repetitions: usize, seed: u64) -> Result<f64> {
    Ok(consistency(system, seq, repetitions, seed)?.c_total)
}

pub fn consistency_per_node(
    system: &Simulator,
    seq: &LabeledSequence,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(consistency(system, seq, repetitions, seed)?.c_node)
}
