//! Evolutionary training of the Boolean readout: flip a few randomly chosen
//! mirrors between epochs and keep the change only if the error drops.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::LabeledSequence;
use crate::error::{check_len, Error, Result};
use crate::optics::Simulator;
use crate::readout::{
    apply_normalization, classify, detect, fit_normalization, nmse, normalize_trace, ser,
    BooleanMask, Normalization,
};
use crate::seed::{self, tag, Rng};
use crate::state::StateCollectMatrix;

/// Number of mirrors flipped per epoch:
/// `max(min_flips, round(initial_flips · decay^k))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipSchedule {
    pub initial_flips: usize,
    pub decay: f64,
    pub min_flips: usize,
}

impl FlipSchedule {
    /// `max(1, n/10)` initial flips, decay 0.995, at least one flip.
    pub fn for_nodes(n: usize) -> Self {
        FlipSchedule {
            initial_flips: (n / 10).max(1),
            decay: 0.995,
            min_flips: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_flips == 0 {
            return Err(Error::domain("initial_flips", "must be positive"));
        }
        if self.min_flips == 0 {
            return Err(Error::domain("min_flips", "must be positive"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::domain("decay", format!("must lie in (0, 1], got {}", self.decay)));
        }
        Ok(())
    }

    pub fn flips(&self, epoch: usize) -> usize {
        let f = (self.initial_flips as f64 * self.decay.powi(epoch.min(i32::MAX as usize) as i32)).round();
        (f as usize).max(self.min_flips)
    }
}

impl Default for FlipSchedule {
    fn default() -> Self {
        FlipSchedule::for_nodes(350)
    }
}

/// How the error of a trial configuration is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// One recorded state-collect matrix reused for every epoch.
    #[default]
    Frozen,
    /// Fresh noisy responses every epoch, as on hardware.
    InSitu,
}

/// Outcome of training one readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub best_mask: BooleanMask,
    /// Error of the kept configuration: index 0 is the initial random mask,
    /// index `k` the state after epoch `k`.
    pub error_curve: Vec<f64>,
    /// Error measured for the trial of each epoch (index `k - 1`).
    pub trial_errors: Vec<f64>,
    pub accepted: Vec<bool>,
    pub flips: Vec<usize>,
    pub accepted_epochs: usize,
    /// Batch normalization of the best mask on the training data; reused at
    /// test time.
    pub normalization: Normalization,
    pub seed: u64,
}

impl TrainRecord {
    pub fn final_error(&self) -> f64 {
        *self.error_curve.last().expect("curve has the initial entry")
    }
}

fn check_epochs(epochs: usize) -> Result<()> {
    if epochs == 0 {
        Err(Error::domain("epochs", "must be at least 1"))
    } else {
        Ok(())
    }
}

fn random_mask(n: usize, rng: &mut Rng) -> BooleanMask {
    BooleanMask {
        bits: (0..n).map(|_| rng.random_bool(0.5)).collect(),
    }
}

fn error_of(raw: &[f64], target: &[f64]) -> Result<f64> {
    nmse(&normalize_trace(raw).values, target)
}

/// Greedy mirror-flip training on a fixed state-collect matrix.
pub fn train_mask(
    m: &StateCollectMatrix,
    target: &[f64],
    schedule: &FlipSchedule,
    epochs: usize,
    seed: u64,
) -> Result<TrainRecord> {
    check_len("training target", m.steps(), target.len())?;
    check_epochs(epochs)?;
    schedule.validate()?;
    let n = m.nodes();
    let mut rng = seed::rng(seed);
    let mut mask = random_mask(n, &mut rng);
    let mut raw = detect(m, &mask)?;
    let mut err = error_of(&raw, target)?;

    let mut record = TrainRecord {
        best_mask: mask.clone(),
        error_curve: Vec::with_capacity(epochs + 1),
        trial_errors: Vec::with_capacity(epochs),
        accepted: Vec::with_capacity(epochs),
        flips: Vec::with_capacity(epochs),
        accepted_epochs: 0,
        normalization: fit_normalization(&raw),
        seed,
    };
    record.error_curve.push(err);

    let mut trial = raw.clone();
    for k in 0..epochs {
        let f = schedule.flips(k).min(n);
        let positions = index::sample(&mut rng, n, f);
        trial.copy_from_slice(&raw);
        for i in positions.iter() {
            let sign = if mask.bits[i] { -1.0 } else { 1.0 };
            for (t, v) in trial.iter_mut().zip(m.column(i)) {
                *t += sign * v;
            }
        }
        let mut trial_err = error_of(&trial, target)?;
        let mut keep = false;
        if trial_err < err {
            // Confirm on an exactly recomputed trace so the recorded errors
            // never drift from what the mask actually produces.
            let mut candidate = mask.clone();
            for i in positions.iter() {
                candidate.bits[i] = !candidate.bits[i];
            }
            let exact = detect(m, &candidate)?;
            trial_err = error_of(&exact, target)?;
            if trial_err < err {
                keep = true;
                mask = candidate;
                raw = exact;
                err = trial_err;
            }
        }
        record.trial_errors.push(trial_err);
        record.accepted.push(keep);
        record.flips.push(f);
        if keep {
            record.accepted_epochs += 1;
        }
        record.error_curve.push(err);
    }
    record.normalization = fit_normalization(&raw);
    record.best_mask = mask;
    Ok(record)
}

/// Detector trace of `mask` on noiseless responses with fresh noise added
/// to every selected node.
fn noisy_detect(base: &StateCollectMatrix, mask: &BooleanMask, sigma: f64, rng: &mut Rng) -> Vec<f64> {
    let mut raw = vec![0.0; base.steps()];
    let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    for (i, _) in mask.bits.iter().enumerate().filter(|(_, &b)| b) {
        for (r, &v) in raw.iter_mut().zip(base.column(i)) {
            *r += match &normal {
                Some(d) => (v + d.sample(rng)).max(0.0),
                None => v,
            };
        }
    }
    raw
}

/// Greedy training where every epoch measures the trial on freshly noisy
/// responses. The kept error is the measurement made when the
/// configuration was accepted.
pub fn train_mask_in_situ(
    noiseless: &StateCollectMatrix,
    sigma: f64,
    target: &[f64],
    schedule: &FlipSchedule,
    epochs: usize,
    seed: u64,
) -> Result<TrainRecord> {
    check_len("training target", noiseless.steps(), target.len())?;
    check_epochs(epochs)?;
    schedule.validate()?;
    let n = noiseless.nodes();
    let mut rng = seed::rng(seed);
    let mut noise = seed::rng(seed::derive(seed, &[tag::NOISE]));
    let mut mask = random_mask(n, &mut rng);
    let mut raw = noisy_detect(noiseless, &mask, sigma, &mut noise);
    let mut err = error_of(&raw, target)?;
    let mut record = TrainRecord {
        best_mask: mask.clone(),
        error_curve: vec![err],
        trial_errors: Vec::with_capacity(epochs),
        accepted: Vec::with_capacity(epochs),
        flips: Vec::with_capacity(epochs),
        accepted_epochs: 0,
        normalization: fit_normalization(&raw),
        seed,
    };
    for k in 0..epochs {
        let f = schedule.flips(k).min(n);
        let mut candidate = mask.clone();
        for i in index::sample(&mut rng, n, f).iter() {
            candidate.bits[i] = !candidate.bits[i];
        }
        let trial = noisy_detect(noiseless, &candidate, sigma, &mut noise);
        let trial_err = error_of(&trial, target)?;
        let keep = trial_err < err;
        if keep {
            mask = candidate;
            raw = trial;
            err = trial_err;
            record.accepted_epochs += 1;
        }
        record.trial_errors.push(trial_err);
        record.accepted.push(keep);
        record.flips.push(f);
        record.error_curve.push(err);
    }
    record.normalization = fit_normalization(&raw);
    record.best_mask = mask;
    Ok(record)
}

/// One-vs-all target for `class`.
pub fn one_vs_all_target(labels: &[u32], class: u32) -> Vec<f64> {
    labels.iter().map(|&l| if l == class { 1.0 } else { 0.0 }).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingOptions {
    pub schedule: FlipSchedule,
    pub epochs: usize,
    pub mode: TrainingMode,
    pub seed: u64,
}

/// All per-class readouts plus the combined training-set performance.
#[derive(Debug, Clone)]
pub struct TrainedReadout {
    pub records: Vec<TrainRecord>,
    /// Symbol error rate of the argmax combination on the training data.
    pub train_ser: f64,
    pub mean_nmse: f64,
}

/// Trains one readout per class on a single simulated response matrix.
pub fn train_all_classes(
    system: &Simulator,
    seq_train: &LabeledSequence,
    options: &TrainingOptions,
) -> Result<TrainedReadout> {
    let n_classes = seq_train.n_classes();
    let responses = system.class_node_responses(seq_train)?;
    let noiseless = system.assemble(seq_train, &responses, None)?;
    let frozen = match options.mode {
        TrainingMode::Frozen => {
            let mut noise = seed::rng(seed::derive(options.seed, &[tag::NOISE]));
            Some(system.assemble(seq_train, &responses, Some(&mut noise))?)
        }
        TrainingMode::InSitu => None,
    };
    let sigma = system.params().noise_sigma();
    let records = (0..n_classes as u32)
        .into_par_iter()
        .map(|c| {
            let target = one_vs_all_target(&seq_train.labels, c);
            let s = seed::derive(options.seed, &[tag::TRAINING, c as u64]);
            match &frozen {
                Some(m) => train_mask(m, &target, &options.schedule, options.epochs, s),
                None => train_mask_in_situ(&noiseless, sigma, &target, &options.schedule, options.epochs, s),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let train_matrix = frozen.as_ref().unwrap_or(&noiseless);
    let outputs = records
        .iter()
        .map(|r| Ok(apply_normalization(&detect(train_matrix, &r.best_mask)?, r.normalization).values))
        .collect::<Result<Vec<_>>>()?;
    let train_ser = ser(&classify(&outputs)?, &seq_train.labels)?;
    let mean_nmse = records.iter().map(TrainRecord::final_error).sum::<f64>() / records.len() as f64;
    Ok(TrainedReadout {
        records,
        train_ser,
        mean_nmse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub ser: f64,
    pub class_nmse: Vec<f64>,
    pub predicted: Vec<u32>,
}

/// Scores trained readouts on a response matrix using the stored training
/// normalizations.
pub fn evaluate_matrix(records: &[TrainRecord], m: &StateCollectMatrix, labels: &[u32]) -> Result<Evaluation> {
    let outputs = records
        .iter()
        .map(|r| Ok(apply_normalization(&detect(m, &r.best_mask)?, r.normalization).values))
        .collect::<Result<Vec<_>>>()?;
    let class_nmse = outputs
        .iter()
        .enumerate()
        .map(|(c, y)| nmse(y, &one_vs_all_target(labels, c as u32)))
        .collect::<Result<Vec<_>>>()?;
    let predicted = classify(&outputs)?;
    Ok(Evaluation {
        ser: ser(&predicted, labels)?,
        class_nmse,
        predicted,
    })
}

/// Fresh responses on the test sequence, then [`evaluate_matrix`].
pub fn evaluate(
    records: &[TrainRecord],
    system: &Simulator,
    seq_test: &LabeledSequence,
    noise: Option<&mut Rng>,
) -> Result<Evaluation> {
    check_len("readout count", seq_test.n_classes(), records.len())?;
    let m = system.respond(seq_test, noise)?;
    evaluate_matrix(records, &m, &seq_test.labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Provenance;
    use nalgebra::DMatrix;

    /// Node 3 equals the binary target, all other nodes are constant.
    fn planted(t: usize, n: usize, seed_: u64) -> (StateCollectMatrix, Vec<f64>) {
        let mut rng = seed::rng(seed_);
        let target: Vec<f64> = (0..t).map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 }).collect();
        let data = DMatrix::from_fn(t, n, |r, c| if c == 3 { target[r] } else { 0.25 + c as f64 * 0.01 });
        (StateCollectMatrix::new(data, Provenance::default()).unwrap(), target)
    }

    #[test]
    fn schedule_is_non_increasing() {
        let s = FlipSchedule::for_nodes(350);
        assert_eq!(s.initial_flips, 35);
        assert_eq!(s.flips(0), 35);
        let mut prev = usize::MAX;
        for k in 0..3000 {
            let f = s.flips(k);
            assert!(f <= prev && f >= 1);
            prev = f;
        }
        assert_eq!(s.flips(5000), 1);
    }

    #[test]
    fn planted_solution_is_found() {
        let (m, target) = planted(200, 20, 1);
        let schedule = FlipSchedule { initial_flips: 2, decay: 0.99, min_flips: 1 };
        let rec = train_mask(&m, &target, &schedule, 20 * 50, 5).unwrap();
        assert!(rec.final_error() < 1e-6, "final error {}", rec.final_error());
    }

    #[test]
    fn single_epoch_bookkeeping() {
        let (m, target) = planted(50, 10, 2);
        let rec = train_mask(&m, &target, &FlipSchedule::for_nodes(10), 1, 0).unwrap();
        assert_eq!(rec.error_curve.len(), 2);
        assert_eq!(rec.trial_errors.len(), 1);
        assert!(train_mask(&m, &target, &FlipSchedule::for_nodes(10), 0, 0).is_err());
        assert!(train_mask(&m, &target[..10], &FlipSchedule::for_nodes(10), 1, 0).is_err());
    }

    #[test]
    fn training_is_deterministic_and_greedy() {
        let (m, target) = planted(120, 30, 3);
        let schedule = FlipSchedule::for_nodes(30);
        let a = train_mask(&m, &target, &schedule, 300, 9).unwrap();
        let b = train_mask(&m, &target, &schedule, 300, 9).unwrap();
        assert_eq!(a, b);
        for k in 0..300 {
            if a.accepted[k] {
                assert!(a.error_curve[k + 1] < a.error_curve[k]);
            } else {
                assert_eq!(a.error_curve[k + 1], a.error_curve[k]);
            }
        }
        let replay = error_of(&detect(&m, &a.best_mask).unwrap(), &target).unwrap();
        assert!((replay - a.final_error()).abs() <= 1e-12);
    }

    #[test]
    fn in_situ_mode_keeps_measured_errors_monotone() {
        let (m, target) = planted(100, 12, 4);
        let rec = train_mask_in_situ(&m, 0.05, &target, &FlipSchedule::for_nodes(12), 200, 1).unwrap();
        assert!(rec.error_curve.windows(2).all(|w| w[1] <= w[0]));
        let noiseless = train_mask_in_situ(&m, 0.0, &target, &FlipSchedule::for_nodes(12), 200, 1).unwrap();
        let replay = error_of(&detect(&m, &noiseless.best_mask).unwrap(), &target).unwrap();
        assert!((replay - noiseless.final_error()).abs() <= 1e-12);
    }

    #[test]
    fn one_hot_masks_give_zero_ser() {
        let labels: Vec<u32> = (0..40).map(|i| (i * 7 % 4) as u32).collect();
        let data = DMatrix::from_fn(40, 4, |r, c| if labels[r] == c as u32 { 1.0 } else { 0.0 });
        let m = StateCollectMatrix::new(data, Provenance::default()).unwrap();
        let records: Vec<TrainRecord> = (0..4)
            .map(|c| TrainRecord {
                best_mask: BooleanMask::unit(4, c),
                error_curve: vec![0.0],
                trial_errors: vec![],
                accepted: vec![],
                flips: vec![],
                accepted_epochs: 0,
                normalization: Normalization { offset: 0.0, scale: 1.0 },
                seed: 0,
            })
            .collect();
        let eval = evaluate_matrix(&records, &m, &labels).unwrap();
        assert_eq!(eval.ser, 0.0);
        assert!(eval.class_nmse.iter().all(|&e| e == 0.0));
    }
}
