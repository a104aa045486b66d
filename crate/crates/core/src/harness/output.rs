//! Result persistence: incremental CSV tables, plot-ready long tables and
//! their JSON manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sweep::{ResultRow, RowSink, METRIC_COLUMNS, PARAM_COLUMNS};
use crate::error::{Error, Result};
use crate::training::TrainRecord;

pub const RESULTS_FILE: &str = "results.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes each accepted row to `results.csv` and flushes immediately, so an
/// interrupted sweep leaves a valid prefix. Wall times go to a separate
/// `timings.csv`, the only output that differs between identical runs.
pub struct CsvSink {
    results: csv::Writer<File>,
    timings: BufWriter<File>,
}

impl CsvSink {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let results = csv::Writer::from_path(dir.join(RESULTS_FILE))?;
        let path = dir.join(TIMINGS_FILE);
        let mut timings = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        writeln!(timings, "point,repetition,wall_time_s").map_err(|e| Error::io(&path, e))?;
        Ok(CsvSink { results, timings })
    }
}

impl RowSink for CsvSink {
    fn accept(&mut self, row: &ResultRow) -> Result<()> {
        self.results.serialize(row)?;
        self.results.flush().map_err(|e| Error::io(RESULTS_FILE, e))?;
        writeln!(self.timings, "{},{},{:.6}", row.point, row.repetition, row.wall_time_s)
            .and_then(|_| self.timings.flush())
            .map_err(|e| Error::io(TIMINGS_FILE, e))?;
        Ok(())
    }
}

pub fn read_table(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?)
}

pub fn unit_of(column: &str) -> &'static str {
    match column {
        "delta_lambda_nm" => "nm (relative to 918.9 nm)",
        "power_ratio" => "P_inj / P_VCSEL",
        "bias_ratio" => "I_bias / I_th (I_th = 20 mA)",
        "ring_fraction" => "area fraction of the input disk",
        "n_bits" => "bits",
        "noise_scale" => "per-site intensity units",
        "vcsel_on" => "boolean",
        "nmse" | "ser" | "c_total" | "c_node_mean" | "D" => "dimensionless",
        "k_min" => "principal components",
        "seed" => "u64",
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub recipe: String,
    /// Name of the published figure the sweep imitates, when any.
    pub figure: Option<String>,
    pub file: String,
    pub axes: Vec<ColumnInfo>,
    pub metrics: Vec<ColumnInfo>,
    pub rows: usize,
}

fn column_info(name: &str) -> ColumnInfo {
    ColumnInfo {
        name: name.to_string(),
        unit: unit_of(name).to_string(),
    }
}

/// Writes `plot_<recipe>.csv` with columns `axes..., metrics..., seed` and
/// a `manifest.json` describing it. With no explicit metrics, every metric
/// that has a value in some row is included.
pub fn emit_plotdata(
    rows: &[ResultRow],
    axes: &[&str],
    metrics: Option<&[&str]>,
    recipe: &str,
    figure: Option<&str>,
    out_dir: &Path,
) -> Result<PathBuf> {
    if rows.is_empty() {
        return Err(Error::EmptySelection("no result rows to plot".into()));
    }
    if axes.is_empty() {
        return Err(Error::EmptySelection("no axes selected".into()));
    }
    for a in axes {
        if !PARAM_COLUMNS.contains(a) {
            return Err(Error::UnknownAxis(a.to_string()));
        }
    }
    let metrics: Vec<&str> = match metrics {
        Some(m) => {
            for name in m {
                if !METRIC_COLUMNS.contains(name) {
                    return Err(Error::UnknownAxis(name.to_string()));
                }
            }
            m.to_vec()
        }
        None => METRIC_COLUMNS
            .iter()
            .copied()
            .filter(|c| rows.iter().any(|r| r.value(c).is_some()))
            .collect(),
    };
    if metrics.is_empty() {
        return Err(Error::EmptySelection("no metric has values".into()));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let file = format!("plot_{recipe}.csv");
    let path = out_dir.join(&file);
    let mut w = csv::Writer::from_path(&path)?;
    let header: Vec<&str> = axes.iter().chain(&metrics).copied().chain(["seed"]).collect();
    w.write_record(&header)?;
    for row in rows {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for c in axes.iter().chain(&metrics) {
            record.push(row.value(c).map(|v| v.to_string()).unwrap_or_default());
        }
        record.push(row.seed.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let manifest = PlotManifest {
        recipe: recipe.to_string(),
        figure: figure.map(str::to_string),
        file,
        axes: axes.iter().map(|a| column_info(a)).collect(),
        metrics: metrics.iter().map(|m| column_info(m)).collect(),
        rows: rows.len(),
    };
    let mpath = out_dir.join(MANIFEST_FILE);
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&mpath, e))?;
    Ok(path)
}

/// Training curves of all classes: `class, epoch, epsilon, accepted, flips`.
/// Epoch 0 is the initial random mask.
pub fn write_training_curves(records: &[TrainRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["class", "epoch", "epsilon", "accepted", "flips"])?;
    for (c, r) in records.iter().enumerate() {
        for (k, eps) in r.error_curve.iter().enumerate() {
            let (accepted, flips) = if k == 0 {
                (String::new(), String::new())
            } else {
                (r.accepted[k - 1].to_string(), r.flips[k - 1].to_string())
            };
            w.write_record([c.to_string(), k.to_string(), eps.to_string(), accepted, flips])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
