//! Fixtures shared by the benchmarks.

use pnn_core::encoder::make_sequence;
use pnn_core::optics::{DeviceSeeds, ReservoirParams, ResponseModel, Simulator};
use pnn_core::{Grid, LabeledSequence};

/// A reduced-size reservoir and a labelled sequence for it.
pub fn fixture(sites: usize, nodes: usize, steps: usize, n_bits: u32) -> (Simulator, LabeledSequence) {
    let params = ReservoirParams {
        sites,
        nodes,
        ..ReservoirParams::default()
    };
    let grid = Grid::default();
    let sim = Simulator::new(params, grid, DeviceSeeds::from_device_seed(1), ResponseModel::Saturable)
        .expect("valid fixture parameters");
    let seq = make_sequence(grid, n_bits, steps, 0.5, 7).expect("valid sequence");
    (sim, seq)
}
