//! Configuration, sweep orchestration and result persistence.

pub mod config;
pub mod output;
pub mod recipes;
pub mod sweep;

pub use config::{parse_config, parse_config_str, Axis, ExperimentConfig};
pub use output::{emit_plotdata, read_table, write_training_curves, CsvSink};
pub use recipes::{recipe, run_recipe, Recipe, RECIPE_NAMES};
pub use sweep::{run_sweep, Experiment, ResultRow, RowSink};
