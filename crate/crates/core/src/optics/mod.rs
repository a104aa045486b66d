//! Passive input weights and the steady-state nonlinear response of the
//! injection-locked VCSEL.

pub mod coupling;
pub mod simulator;
pub mod transmission;
pub mod vcsel;

pub use coupling::CouplingOperator;
pub use simulator::{DeviceSeeds, ResponseModel, Simulator};
pub use transmission::TransmissionMatrix;
pub use vcsel::{
    inject, locking_efficiency, sample_nodes, NodeLayout, ReservoirParams, ReservoirState,
    RESONANCE_NM, REFERENCE_POWER_MW, THRESHOLD_CURRENT_MA,
};
