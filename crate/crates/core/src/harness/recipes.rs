//! Named sweep presets, one per published parameter study.

use std::path::Path;

use super::config::{Axis, ExperimentConfig};
use super::output::{emit_plotdata, CsvSink};
use super::sweep::{execute, plan, Experiment, ResultRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Recipe {
    pub name: &'static str,
    pub figure: &'static str,
    pub experiment: Experiment,
    /// Named sub-sweeps; each is the Cartesian product of its axes.
    pub segments: Vec<(String, Vec<Axis>)>,
    pub plot_axes: Vec<&'static str>,
    pub plot_metrics: Vec<&'static str>,
    pub description: &'static str,
}

fn range(start: f64, step: f64, count: usize) -> Vec<f64> {
    // Rounded so that grid values print as short decimals.
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

pub const RECIPE_NAMES: &[&str] = &["fig2b", "fig2c", "fig3a", "fig4", "fig5"];

pub fn recipe(name: &str) -> Result<Recipe> {
    let seg = |name: &str, axes: Vec<Axis>| (name.to_string(), axes);
    Ok(match name {
        "fig2b" => Recipe {
            name: "fig2b",
            figure: "Fig2b",
            experiment: Experiment::Train,
            segments: vec![seg(
                "wavelength",
                vec![
                    Axis::new("power_ratio", vec![0.1, 0.4, 0.8, 1.2]),
                    // ±0.5 nm around resonance.
                    Axis::new("delta_lambda_nm", range(-0.5, 0.1, 11)),
                ],
            )],
            plot_axes: vec!["delta_lambda_nm", "power_ratio"],
            plot_metrics: vec!["nmse"],
            description: "trained NMSE over injection detuning for several power ratios",
        },
        "fig2c" => Recipe {
            name: "fig2c",
            figure: "Fig2c",
            experiment: Experiment::Train,
            segments: vec![seg(
                "power",
                vec![Axis::new(
                    "power_ratio",
                    vec![0.1, 0.2, 0.35, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 3.6],
                )],
            )],
            plot_axes: vec!["power_ratio"],
            plot_metrics: vec!["nmse", "ser"],
            description: "trained NMSE and SER over injection power ratio at resonance",
        },
        "fig3a" => Recipe {
            name: "fig3a",
            figure: "Fig3a",
            experiment: Experiment::Train,
            segments: vec![seg(
                "ring",
                vec![
                    Axis::new("bias_ratio", vec![1.1, 1.2, 1.3, 1.4, 1.5]),
                    Axis::new("ring_fraction", range(0.0, 0.1, 10)),
                ],
            )],
            plot_axes: vec!["ring_fraction", "bias_ratio"],
            plot_metrics: vec!["nmse"],
            description: "trained NMSE over locking-ring area for several bias currents",
        },
        "fig4" => Recipe {
            name: "fig4",
            figure: "Fig4",
            experiment: Experiment::Consistency,
            segments: vec![
                seg("power", vec![Axis::new("power_ratio", vec![0.1, 0.35, 1.2, 3.6])]),
                seg(
                    "bias",
                    vec![
                        Axis::new("power_ratio", vec![1.0]),
                        Axis::new("bias_ratio", vec![1.1, 1.2, 1.3, 1.5]),
                    ],
                ),
                seg("wavelength", vec![Axis::new("delta_lambda_nm", range(-0.5, 0.1, 11))]),
            ],
            plot_axes: vec!["power_ratio", "bias_ratio", "delta_lambda_nm"],
            plot_metrics: vec!["c_total", "c_node_mean"],
            description: "total and node-resolved consistency over power, bias and detuning",
        },
        "fig5" => Recipe {
            name: "fig5",
            figure: "Fig5",
            experiment: Experiment::Dimensionality,
            segments: vec![
                seg(
                    "on_off",
                    vec![
                        Axis::new("power_ratio", vec![0.8]),
                        Axis::new("vcsel_on", vec![1.0, 0.0]),
                        Axis::new("n_bits", range(3.0, 1.0, 8)),
                    ],
                ),
                seg(
                    "bias",
                    vec![
                        Axis::new("power_ratio", vec![0.8]),
                        Axis::new("bias_ratio", vec![1.1, 1.3, 1.5]),
                        Axis::new("n_bits", range(3.0, 1.0, 8)),
                    ],
                ),
            ],
            plot_axes: vec!["n_bits", "vcsel_on", "bias_ratio"],
            plot_metrics: vec!["k_min"],
            description: "dimensionality over input bits, device on/off and bias current",
        },
        other => return Err(Error::UnknownRecipe(other.to_string())),
    })
}

/// Runs a recipe into `out_dir`: `results.csv`, `timings.csv`,
/// `plot_<name>.csv`, `manifest.json` and the effective `config.toml`.
pub fn run_recipe(config: &ExperimentConfig, recipe: &Recipe, out_dir: &Path) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let jobs = plan(&recipe.segments, config.run.repetitions);
    let mut sink = CsvSink::create(out_dir)?;
    config.save(&out_dir.join("config.toml"))?;
    let rows = execute(config, recipe.experiment, &jobs, &mut sink)?;
    emit_plotdata(
        &rows,
        &recipe.plot_axes,
        Some(&recipe.plot_metrics),
        recipe.name,
        Some(recipe.figure),
        out_dir,
    )?;
    Ok(rows)
}
