//! Experiment configuration: a TOML file with one section per subsystem.
//! Every key is optional; omitted keys take the documented defaults and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoder::{Grid, MAX_BITS};
use crate::error::{Error, Result};
use crate::metrics::CovarianceMode;
use crate::optics::{ReservoirParams, ResponseModel};
use crate::training::{FlipSchedule, TrainingMode, TrainingOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub n_bits: u32,
    pub ring_fraction: f64,
    pub grid_side_px: usize,
    pub disk_radius_px: f64,
    /// Length `T` of training and analysis sequences.
    pub sequence_length: usize,
    /// Length of the held-out test sequence.
    pub test_length: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            n_bits: 3,
            ring_fraction: 0.5,
            grid_side_px: 64,
            disk_radius_px: 30.0,
            sequence_length: 1000,
            test_length: 1000,
        }
    }
}

impl EncoderConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            side_px: self.grid_side_px,
            disk_radius_px: self.disk_radius_px,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub initial_flips: usize,
    pub decay: f64,
    pub min_flips: usize,
    pub mode: TrainingMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let s = FlipSchedule::default();
        TrainingConfig {
            epochs: 2000,
            initial_flips: s.initial_flips,
            decay: s.decay,
            min_flips: s.min_flips,
            mode: TrainingMode::Frozen,
        }
    }
}

impl TrainingConfig {
    pub fn schedule(&self) -> FlipSchedule {
        FlipSchedule {
            initial_flips: self.initial_flips,
            decay: self.decay,
            min_flips: self.min_flips,
        }
    }

    pub fn options(&self, seed: u64) -> TrainingOptions {
        TrainingOptions {
            schedule: self.schedule(),
            epochs: self.epochs,
            mode: self.mode,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Repeated presentations `R` used for consistency.
    pub consistency_repetitions: usize,
    pub covariance: CovarianceMode,
    pub probe_bits: u32,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            consistency_repetitions: 5,
            covariance: CovarianceMode::Centered,
            probe_bits: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// `false` replaces the laser by passive pass-through of `|W u|²`.
    pub vcsel_on: bool,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig { vcsel_on: true }
    }
}

impl DeviceConfig {
    pub fn model(&self) -> ResponseModel {
        if self.vcsel_on {
            ResponseModel::Saturable
        } else {
            ResponseModel::PassThrough
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Every random stream of a run derives from this seed.
    pub master_seed: u64,
    /// Independent device realizations per sweep point.
    pub repetitions: usize,
    /// Worker threads; 0 picks the number of cores.
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            repetitions: 1,
            workers: 0,
            output_dir: PathBuf::from("results"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: impl Into<Vec<f64>>) -> Self {
        Axis {
            name: name.to_string(),
            values: values.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "axis")]
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub reservoir: ReservoirParams,
    pub encoder: EncoderConfig,
    pub training: TrainingConfig,
    pub metrics: MetricsConfig,
    pub device: DeviceConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
}

/// Names accepted as sweep axes, each mapped to one config field.
pub const AXIS_NAMES: &[&str] = &[
    "bias_ratio",
    "power_ratio",
    "delta_lambda_nm",
    "lock_width_nm",
    "sat_scale",
    "gain",
    "noise_scale",
    "mix_weight",
    "diffusion_length",
    "sites",
    "nodes",
    "n_bits",
    "ring_fraction",
    "sequence_length",
    "epochs",
    "vcsel_on",
];

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(Error::Config {
            line: None,
            field: Some(name.to_string()),
            message: format!("`{name}` needs a non-negative integer, got {v}"),
        })
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.reservoir.validate()?;
        self.encoder.grid().validate()?;
        if !(1..=MAX_BITS).contains(&self.encoder.n_bits) {
            return Err(Error::domain("n_bits", format!("must lie in [1, {MAX_BITS}]")));
        }
        if !(0.0..=1.0).contains(&self.encoder.ring_fraction) {
            return Err(Error::domain("ring_fraction", "must lie in [0, 1]"));
        }
        if self.encoder.sequence_length < 2 {
            return Err(Error::domain("sequence_length", "must be at least 2"));
        }
        if self.encoder.test_length == 0 {
            return Err(Error::domain("test_length", "must be at least 1"));
        }
        if self.training.epochs == 0 {
            return Err(Error::domain("epochs", "must be at least 1"));
        }
        self.training.schedule().validate()?;
        if self.metrics.consistency_repetitions < 2 {
            return Err(Error::domain("consistency_repetitions", "must be at least 2"));
        }
        if !(1..=MAX_BITS).contains(&self.metrics.probe_bits) {
            return Err(Error::domain("probe_bits", format!("must lie in [1, {MAX_BITS}]")));
        }
        if self.run.repetitions == 0 {
            return Err(Error::domain("repetitions", "must be at least 1"));
        }
        for axis in &self.sweep.axes {
            if !AXIS_NAMES.contains(&axis.name.as_str()) {
                return Err(Error::UnknownAxis(axis.name.clone()));
            }
            if axis.values.is_empty() {
                return Err(Error::Config {
                    line: None,
                    field: Some(axis.name.clone()),
                    message: format!("axis `{}` has no values", axis.name),
                });
            }
        }
        Ok(())
    }

    /// Current value of an axis field.
    pub fn get(&self, name: &str) -> Result<f64> {
        let r = &self.reservoir;
        Ok(match name {
            "bias_ratio" => r.bias_ratio,
            "power_ratio" => r.power_ratio,
            "delta_lambda_nm" => r.delta_lambda_nm,
            "lock_width_nm" => r.lock_width_nm,
            "sat_scale" => r.sat_scale,
            "gain" => r.gain,
            "noise_scale" => r.noise_scale,
            "mix_weight" => r.mix_weight,
            "diffusion_length" => r.diffusion_length,
            "sites" => r.sites as f64,
            "nodes" => r.nodes as f64,
            "n_bits" => self.encoder.n_bits as f64,
            "ring_fraction" => self.encoder.ring_fraction,
            "sequence_length" => self.encoder.sequence_length as f64,
            "epochs" => self.training.epochs as f64,
            "vcsel_on" => f64::from(u8::from(self.device.vcsel_on)),
            other => return Err(Error::UnknownAxis(other.to_string())),
        })
    }

    /// Sets an axis field from a numeric sweep value.
    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        let r = &mut self.reservoir;
        match name {
            "bias_ratio" => r.bias_ratio = v,
            "power_ratio" => r.power_ratio = v,
            "delta_lambda_nm" => r.delta_lambda_nm = v,
            "lock_width_nm" => r.lock_width_nm = v,
            "sat_scale" => r.sat_scale = v,
            "gain" => r.gain = v,
            "noise_scale" => r.noise_scale = v,
            "mix_weight" => r.mix_weight = v,
            "diffusion_length" => r.diffusion_length = v,
            "sites" => r.sites = as_count(name, v)?,
            "nodes" => r.nodes = as_count(name, v)?,
            "n_bits" => self.encoder.n_bits = as_count(name, v)? as u32,
            "ring_fraction" => self.encoder.ring_fraction = v,
            "sequence_length" => self.encoder.sequence_length = as_count(name, v)?,
            "epochs" => self.training.epochs = as_count(name, v)?,
            "vcsel_on" => self.device.vcsel_on = v != 0.0,
            other => return Err(Error::UnknownAxis(other.to_string())),
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            line: None,
            field: None,
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line on which `key = ...` appears.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        field: None,
        message: e.message().trim().to_string(),
    })?;
    config.validate().map_err(|e| match e {
        Error::Domain { field, reason } => Error::Config {
            line: line_of_key(text, field),
            field: Some(field.to_string()),
            message: format!("`{field}` {reason}"),
        },
        Error::UnknownAxis(name) => Error::Config {
            line: text.lines().position(|l| l.contains(&format!("\"{name}\""))).map(|i| i + 1),
            field: Some("sweep.axis.name".into()),
            message: format!("unknown sweep axis `{name}`; expected one of {}", AXIS_NAMES.join(", ")),
        },
        other => other,
    })?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.reservoir.bias_ratio, 1.5);
        assert_eq!(c.reservoir.nodes, 350);
        assert_eq!(c.training.initial_flips, 35);
        assert_eq!(c.encoder.ring_fraction, 0.5);
    }

    #[test]
    fn negative_power_ratio_names_field() {
        let text = "[run]\nmaster_seed = 3\n\n[reservoir]\npower_ratio = -1.0\n";
        match parse_config_str(text) {
            Err(Error::Config { line, field, message }) => {
                assert_eq!(field.as_deref(), Some("power_ratio"));
                assert_eq!(line, Some(5));
                assert!(message.contains("power_ratio"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let text = "[reservoir]\nbias_ratio = 1.3\nbogus = 2\n";
        match parse_config_str(text) {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, Some(3));
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_axis_rejected() {
        let text = "[[sweep.axis]]\nname = \"wavelength\"\nvalues = [1.0]\n";
        assert!(matches!(parse_config_str(text), Err(Error::Config { line: Some(2), .. })));
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::default();
        c.reservoir.power_ratio = 0.8;
        c.training.mode = TrainingMode::InSitu;
        c.metrics.covariance = CovarianceMode::RawSecondMoment;
        c.device.vcsel_on = false;
        c.sweep.axes.push(Axis::new("delta_lambda_nm", vec![-0.1, 0.0, 0.1]));
        let text = c.to_toml().unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), c);
    }

    #[test]
    fn get_set_every_axis() {
        let mut c = ExperimentConfig::default();
        for name in AXIS_NAMES {
            let v = c.get(name).unwrap();
            c.set(name, v).unwrap();
        }
        assert_eq!(c, ExperimentConfig::default());
        assert!(c.set("n_bits", 2.5).is_err());
        assert!(c.set("nope", 1.0).is_err());
    }
}
