//! `pnn`: command-line front end for the reservoir simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pnn_core::harness::config::{parse_config, ExperimentConfig};
use pnn_core::harness::output::{write_training_curves, MANIFEST_FILE, RESULTS_FILE};
use pnn_core::harness::recipes::{recipe, run_recipe, RECIPE_NAMES};
use pnn_core::harness::sweep::{
    consistency_point, device_seed, point_seed, point_states, probe_point, run_sweep, train_point, Experiment,
};
use pnn_core::harness::{emit_plotdata, read_table, CsvSink};
use pnn_core::metrics::{analyze, MetricsReport, Provenance};
use pnn_core::{Error, Result};

#[derive(Parser)]
#[command(name = "pnn", version, about = "LA-VCSEL photonic reservoir simulator and sweep harness")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding `run.output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Repetitions per sweep point.
    #[arg(long, global = true)]
    repetitions: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the one-vs-all readouts at the configured operating point.
    Train,
    /// Run a named recipe or the `[[sweep.axis]]` grid of the config.
    Sweep {
        /// One of the recipe names, or `custom`.
        target: String,
        /// Experiment evaluated by a custom sweep.
        #[arg(long, default_value = "train")]
        experiment: Experiment,
    },
    /// Total and node-resolved consistency.
    Consistency,
    /// PCA dimensionality of the state-collect matrix.
    Dimensionality,
    /// Nonlinearity probe on single-bit and all-on headers.
    Probe,
    /// Re-emit plot data from an existing results table.
    EmitPlotdata {
        /// Results table; defaults to `<out>/results.csv`.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        axes: Vec<String>,
        /// Metric columns; all populated metrics when omitted.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long, default_value = "custom")]
        name: String,
        #[arg(long)]
        figure: Option<String>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        config.run.master_seed = s;
    }
    if let Some(o) = &common.out {
        config.run.output_dir = o.clone();
    }
    if let Some(w) = common.workers {
        config.run.workers = w;
    }
    if let Some(r) = common.repetitions {
        config.run.repetitions = r;
    }
    config.validate()?;
    Ok(config)
}

fn prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| io_error(path, e))
}

/// Seeds of the single point evaluated by the one-shot subcommands; they
/// coincide with point 0, repetition 0 of a sweep.
fn seeds(config: &ExperimentConfig) -> (u64, u64) {
    let master = config.run.master_seed;
    (point_seed(master, 0, 0), device_seed(master, 0))
}

fn provenance(config: &ExperimentConfig, seed: u64) -> Provenance {
    Provenance::new(seed, &config.reservoir)
}

fn run(cli: Cli) -> Result<Value> {
    let config = load(&cli.common)?;
    let out = config.run.output_dir.clone();
    let (seed, device) = seeds(&config);
    match cli.command {
        Command::Train => {
            prepare(&out)?;
            let (trained, eval) = train_point(&config, seed, device)?;
            let curves = out.join("curves.csv");
            write_training_curves(&trained.records, &curves)?;
            let summary = json!({
                "train_ser": trained.train_ser,
                "test_ser": eval.ser,
                "mean_nmse": trained.mean_nmse,
                "class_nmse": eval.class_nmse,
                "accepted": trained.records.iter().map(|r| r.accepted_epochs).collect::<Vec<_>>(),
                "seed": seed,
                "device_seed": device,
                "curves": curves,
            });
            write_json(&out.join("train.json"), &summary)?;
            Ok(summary)
        }
        Command::Sweep { target, experiment } => {
            let rows = if target == "custom" {
                let mut sink = CsvSink::create(&out)?;
                config.save(&out.join("config.toml"))?;
                let rows = run_sweep(&config, experiment, &mut sink)?;
                let axes: Vec<&str> = config.sweep.axes.iter().map(|a| a.name.as_str()).collect();
                if !axes.is_empty() {
                    emit_plotdata(&rows, &axes, None, "custom", None, &out)?;
                }
                rows
            } else {
                run_recipe(&config, &recipe(&target)?, &out)?
            };
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            Ok(json!({
                "target": target,
                "rows": rows.len(),
                "failed_points": failed,
                "results": out.join(RESULTS_FILE),
                "manifest": out.join(MANIFEST_FILE),
            }))
        }
        Command::Consistency => {
            prepare(&out)?;
            let report = consistency_point(&config, seed, device)?;
            let metrics = MetricsReport {
                provenance: provenance(&config, seed),
                ..Default::default()
            }
            .with_consistency(&report);
            let value = serde_json::to_value(&metrics)?;
            write_json(&out.join("consistency.json"), &value)?;
            Ok(value)
        }
        Command::Dimensionality => {
            prepare(&out)?;
            let m = point_states(&config, seed, device)?;
            let report = analyze(&m, config.metrics.covariance)?;
            let metrics = MetricsReport {
                provenance: m.provenance.clone(),
                ..Default::default()
            }
            .with_dimensionality(&report);
            let value = serde_json::to_value(&metrics)?;
            write_json(&out.join("dimensionality.json"), &value)?;
            Ok(value)
        }
        Command::Probe => {
            prepare(&out)?;
            let probe = probe_point(&config, device)?;
            let map = out.join("probe_map.csv");
            let mut text = String::from("site,deviation\n");
            for (i, v) in probe.deviation_map.iter().enumerate() {
                text.push_str(&format!("{i},{v}\n"));
            }
            std::fs::write(&map, text).map_err(|e| io_error(&map, e))?;
            let metrics = MetricsReport {
                provenance: provenance(&config, seed),
                ..Default::default()
            }
            .with_probe(&probe);
            let value = serde_json::to_value(&metrics)?;
            write_json(&out.join("probe.json"), &value)?;
            Ok(value)
        }
        Command::EmitPlotdata {
            table,
            axes,
            metrics,
            name,
            figure,
        } => {
            let table = table.unwrap_or_else(|| out.join(RESULTS_FILE));
            let rows = read_table(&table)?;
            let axes: Vec<&str> = axes.iter().map(String::as_str).collect();
            let metrics: Vec<&str> = metrics.iter().map(String::as_str).collect();
            let selected = (!metrics.is_empty()).then_some(metrics.as_slice());
            let file = emit_plotdata(&rows, &axes, selected, &name, figure.as_deref(), &out)?;
            Ok(json!({ "plot": file, "manifest": out.join(MANIFEST_FILE) }))
        }
    }
}

fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    if let Error::Config { line, field, .. } = e {
        v["error"]["line"] = json!(line);
        v["error"]["field"] = json!(field);
    }
    if let Error::UnknownRecipe(_) = e {
        v["error"]["expected"] = json!(RECIPE_NAMES);
    }
    v
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let v = json!({ "error": { "kind": "usage", "message": e.to_string().trim() } });
            eprintln!("{v}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
