//! Boolean output layer: mirror mask, detector summation, output
//! normalization, error and classification.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::state::StateCollectMatrix;

/// Output mirror configuration; `true` sends the node to the detector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BooleanMask {
    pub bits: Vec<bool>,
}

impl BooleanMask {
    pub fn zeros(n: usize) -> Self {
        BooleanMask { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        BooleanMask { bits: vec![true; n] }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n);
        m.bits[i] = true;
        m
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Affine map `y = (raw - offset) / scale` applied to a detector trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: f64,
    /// Zero marks a constant trace, which maps to 0.5.
    pub scale: f64,
}

impl Normalization {
    pub fn apply(&self, raw: f64) -> f64 {
        if self.scale == 0.0 {
            0.5
        } else {
            (raw - self.offset) / self.scale
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTrace {
    pub values: Vec<f64>,
    pub normalization: Normalization,
}

/// Total detected power per time step: `raw[t] = Σ_i mask_i M[t, i]`.
pub fn detect(m: &StateCollectMatrix, mask: &BooleanMask) -> Result<Vec<f64>> {
    check_len("readout mask", m.nodes(), mask.len())?;
    let mut raw = vec![0.0; m.steps()];
    for (i, _) in mask.bits.iter().enumerate().filter(|(_, &b)| b) {
        for (r, v) in raw.iter_mut().zip(m.column(i)) {
            *r += v;
        }
    }
    Ok(raw)
}

/// Batch min/max normalization to `[0, 1]`.
pub fn fit_normalization(raw: &[f64]) -> Normalization {
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if raw.is_empty() || hi <= lo {
        Normalization {
            offset: if raw.is_empty() { 0.0 } else { lo },
            scale: 0.0,
        }
    } else {
        Normalization {
            offset: lo,
            scale: hi - lo,
        }
    }
}

pub fn apply_normalization(raw: &[f64], norm: Normalization) -> OutputTrace {
    OutputTrace {
        values: raw.iter().map(|&v| norm.apply(v)).collect(),
        normalization: norm,
    }
}

pub fn normalize_trace(raw: &[f64]) -> OutputTrace {
    apply_normalization(raw, fit_normalization(raw))
}

/// `ε = (1/T) Σ_t (y(t) - y_target(t))²`.
pub fn nmse(y: &[f64], target: &[f64]) -> Result<f64> {
    check_len("target trace", y.len(), target.len())?;
    if y.is_empty() {
        return Err(Error::domain("T", "NMSE needs at least one sample"));
    }
    let sum: f64 = y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

/// Argmax over classes per time step, ties to the lowest class index.
/// `outputs[c][t]` is the normalized output of readout `c` at step `t`.
pub fn classify(outputs: &[Vec<f64>]) -> Result<Vec<u32>> {
    if outputs.len() < 2 {
        return Err(Error::domain("classes", "classification needs at least two classes"));
    }
    let t = outputs[0].len();
    for o in outputs {
        check_len("class output trace", t, o.len())?;
    }
    Ok((0..t)
        .map(|step| {
            let mut best = 0;
            for c in 1..outputs.len() {
                if outputs[c][step] > outputs[best][step] {
                    best = c;
                }
            }
            best as u32
        })
        .collect())
}

/// Fraction of misclassified symbols.
pub fn ser(predicted: &[u32], labels: &[u32]) -> Result<f64> {
    check_len("predicted labels", labels.len(), predicted.len())?;
    if labels.is_empty() {
        return Ok(0.0);
    }
    let wrong = predicted.iter().zip(labels).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Provenance;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn matrix() -> StateCollectMatrix {
        let data = DMatrix::from_row_slice(3, 4, &[1., 2., 3., 4., 5., 6., 7., 8., 0., 1., 0., 1.]);
        StateCollectMatrix::new(data, Provenance::default()).unwrap()
    }

    #[test]
    fn detect_basic_masks() {
        let m = matrix();
        assert_eq!(detect(&m, &BooleanMask::zeros(4)).unwrap(), vec![0.0; 3]);
        assert_eq!(detect(&m, &BooleanMask::ones(4)).unwrap(), vec![10.0, 26.0, 2.0]);
        assert_eq!(detect(&m, &BooleanMask::unit(4, 1)).unwrap(), vec![2.0, 6.0, 1.0]);
        assert!(detect(&m, &BooleanMask::ones(3)).is_err());
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(normalize_trace(&[2.0, 4.0]).values, vec![0.0, 1.0]);
        assert_eq!(normalize_trace(&[5.0, 5.0, 5.0]).values, vec![0.5; 3]);
        assert_eq!(normalize_trace(&[1.0, 2.0, 3.0]).values, vec![0.0, 0.5, 1.0]);
        let n = normalize_trace(&[1.0, 3.0]).normalization;
        assert_eq!(n, Normalization { offset: 1.0, scale: 2.0 });
    }

    #[test]
    fn nmse_cases() {
        assert_eq!(nmse(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(nmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(nmse(&[0.5, 0.5], &[0.0, 1.0]).unwrap(), 0.25);
        assert!(nmse(&[], &[]).is_err());
        assert!(nmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn classify_and_ser() {
        let outputs = vec![
            vec![0.1, 0.9, 0.2],
            vec![0.8, 0.1, 0.2],
            vec![0.3, 0.2, 0.9],
        ];
        assert_eq!(classify(&outputs).unwrap(), vec![1, 0, 2]);

        let mut tie = vec![vec![0.0; 2]; 6];
        tie[2] = vec![1.0, 1.0];
        tie[5] = vec![1.0, 1.0];
        assert_eq!(classify(&tie).unwrap(), vec![2, 2]);

        let labels = vec![0, 1, 2, 1, 0];
        let one_hot: Vec<Vec<f64>> = (0..3)
            .map(|c| labels.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(ser(&classify(&one_hot).unwrap(), &labels).unwrap(), 0.0);

        assert_eq!(ser(&[1, 1], &[0, 0]).unwrap(), 1.0);
        assert_eq!(ser(&[0, 0, 0, 1, 1, 1, 0, 0], &[0, 1, 1, 1, 1, 1, 0, 1]).unwrap(), 0.375);
        assert!(ser(&[0], &[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn nmse_symmetric_and_non_negative(
            pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..50)
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let e = nmse(&a, &b).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert_eq!(e, nmse(&b, &a).unwrap());
            prop_assert_eq!(e == 0.0, a == b);
        }

        #[test]
        fn detect_is_additive_over_disjoint_masks(bits in prop::collection::vec(0u8..3, 4)) {
            let m = matrix();
            let m1 = BooleanMask { bits: bits.iter().map(|&b| b == 1).collect() };
            let m2 = BooleanMask { bits: bits.iter().map(|&b| b == 2).collect() };
            let union = BooleanMask { bits: bits.iter().map(|&b| b != 0).collect() };
            let a = detect(&m, &m1).unwrap();
            let b = detect(&m, &m2).unwrap();
            let u = detect(&m, &union).unwrap();
            for ((x, y), z) in a.iter().zip(&b).zip(&u) {
                prop_assert!((x + y - z).abs() < 1e-12);
            }
        }

        #[test]
        fn classify_invariant_under_positive_affine(
            data in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 5), 3),
            scales in prop::collection::vec((0.1f64..10.0, -3.0f64..3.0), 5),
        ) {
            let base = classify(&data).unwrap();
            let transformed: Vec<Vec<f64>> = data
                .iter()
                .map(|row| row.iter().zip(&scales).map(|(v, (a, b))| a * v + b).collect())
                .collect();
            prop_assert_eq!(base, classify(&transformed).unwrap());
        }
    }
}
