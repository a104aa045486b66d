//! Computational metrics: consistency, noise-aware PCA dimensionality and
//! the superposition nonlinearity probe.

pub mod consistency;
pub mod pca;
pub mod probe;

use serde::{Deserialize, Serialize};

pub use crate::state::{Provenance, StateCollectMatrix};
pub use consistency::{
    consistency, consistency_per_node, consistency_total, correlation_matrix, ConsistencyReport,
    CorrelationMatrix,
};
pub use pca::{
    analyze, argmin_k, covariance, covariance_with, dimensionality, dimensionality_off,
    eigen_spectrum, indicator_function, CovarianceMode, DimensionalityReport, EigenSpectrum,
};
pub use probe::{nonlinearity_probe, ProbeResult};

/// JSON report combining whichever metrics were computed; absent ones are
/// `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub k_min: Option<usize>,
    pub eigenvalues: Option<Vec<f64>>,
    pub indicator_values: Option<Vec<f64>>,
    pub c_total: Option<f64>,
    pub c_node: Option<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub provenance: Provenance,
    /// Warnings such as heteroscedastic residual noise or degenerate nodes.
    pub flags: Vec<String>,
}

impl MetricsReport {
    pub fn with_dimensionality(mut self, report: &DimensionalityReport) -> Self {
        self.k_min = Some(report.k_min);
        self.eigenvalues = Some(report.eigenvalues.clone());
        self.indicator_values = Some(report.indicator_values.clone());
        if report.heteroscedastic {
            self.flags.push(format!(
                "heteroscedastic residual noise (cv = {:.3}); indicator assumes uniform Gaussian noise",
                report.residual_variance_cv
            ));
        }
        self
    }

    pub fn with_consistency(mut self, report: &ConsistencyReport) -> Self {
        self.c_total = Some(report.c_total);
        self.c_node = Some(report.c_node.clone());
        if !report.degenerate_nodes.is_empty() {
            self.flags.push(format!(
                "{} zero-variance nodes reported with consistency 0",
                report.degenerate_nodes.len()
            ));
        }
        self
    }

    pub fn with_probe(mut self, probe: &ProbeResult) -> Self {
        self.d = Some(probe.d);
        self
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_has_all_keys() {
        let r = MetricsReport {
            k_min: Some(3),
            d: Some(0.1),
            ..Default::default()
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in ["k_min", "eigenvalues", "indicator_values", "c_total", "c_node", "D", "provenance"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["D"], 0.1);
        assert!(v["c_total"].is_null());
    }
}
