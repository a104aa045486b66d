use pnn_core::encoder::make_sequence;
use pnn_core::metrics::{consistency_total, dimensionality, dimensionality_off};
use pnn_core::optics::{DeviceSeeds, ReservoirParams, ResponseModel, Simulator};
use pnn_core::seed;
use pnn_core::training::{evaluate, train_all_classes, FlipSchedule, TrainingMode, TrainingOptions};
use pnn_core::Grid;

fn grid() -> Grid {
    Grid::new(32, 15.0).unwrap()
}

fn system(noise_scale: f64) -> Simulator {
    let params = ReservoirParams {
        sites: 256,
        nodes: 96,
        noise_scale,
        ..ReservoirParams::default()
    };
    Simulator::new(params, grid(), DeviceSeeds::from_device_seed(4), ResponseModel::Saturable).unwrap()
}

#[test]
fn off_dimensionality_is_bounded_by_distinct_inputs() {
    let sim = system(0.0);
    let three = make_sequence(grid(), 3, 400, 0.5, 1).unwrap();
    assert!(dimensionality_off(&sim, &three, None).unwrap() <= 8);
    let one = make_sequence(grid(), 1, 200, 0.5, 2).unwrap();
    assert!(dimensionality_off(&sim, &one, None).unwrap() <= 2);
}

#[test]
fn noiseless_on_response_has_at_most_class_count_rank() {
    let sim = system(0.0);
    let seq = make_sequence(grid(), 3, 400, 0.5, 3).unwrap();
    let k = dimensionality(&sim.respond(&seq, None).unwrap()).unwrap();
    // Centering removes one direction from the 8 class responses.
    assert!((1..=7).contains(&k), "k_min = {k}");
}

#[test]
fn consistency_is_one_without_noise_and_below_with_it() {
    let seq = make_sequence(grid(), 3, 300, 0.5, 5).unwrap();
    let quiet = consistency_total(&system(0.0), &seq, 4, 11).unwrap();
    assert!((quiet - 1.0).abs() <= 1e-12);
    for sigma in [1e-3, 0.05] {
        assert!(consistency_total(&system(sigma), &seq, 4, 11).unwrap() < 1.0);
    }
}

#[test]
fn train_and_evaluate_end_to_end() {
    let sim = system(0.008);
    let train = make_sequence(grid(), 3, 300, 0.5, 6).unwrap();
    let options = TrainingOptions {
        schedule: FlipSchedule::default(),
        epochs: 300,
        mode: TrainingMode::Frozen,
        seed: 8,
    };
    let a = train_all_classes(&sim, &train, &options).unwrap();
    let b = train_all_classes(&sim, &train, &options).unwrap();
    assert_eq!(a.mean_nmse, b.mean_nmse);
    assert!(a.records.iter().zip(&b.records).all(|(x, y)| x.best_mask == y.best_mask));
    for r in &a.records {
        assert!(r.error_curve.windows(2).all(|w| w[1] <= w[0]));
    }

    let test = make_sequence(grid(), 3, 200, 0.5, 7).unwrap();
    let mut noise = seed::rng(1);
    let eval = evaluate(&a.records, &sim, &test, Some(&mut noise)).unwrap();
    assert_eq!(eval.predicted.len(), 200);
    // Far better than the 7/8 error of guessing.
    assert!(eval.ser < 0.3, "SER {}", eval.ser);
}
