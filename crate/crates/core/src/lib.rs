//! Simulator of a spatially multiplexed photonic reservoir built on an
//! injection-locked large-area VCSEL, with Boolean in-situ readout
//! training, consistency and noise-aware dimensionality metrics, and a
//! deterministic parameter-sweep harness.
//!
//! Pipeline: [`encoder`] builds Boolean header images, [`optics`] maps them
//! through the fiber and the laser to node intensities, [`readout`] and
//! [`training`] implement the mirror-mask output layer, and [`metrics`]
//! analyses state-collect matrices.

pub mod encoder;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod optics;
pub mod readout;
pub mod seed;
pub mod state;
pub mod training;

pub use encoder::{make_header_pattern, make_sequence, pattern_to_vector, Grid, InputPattern, LabeledSequence};
pub use error::{Error, Result};
pub use optics::{DeviceSeeds, ReservoirParams, ResponseModel, Simulator};
pub use readout::BooleanMask;
pub use state::StateCollectMatrix;
pub use training::{FlipSchedule, TrainRecord};
