use pnn_core::harness::config::{parse_config, Axis, ExperimentConfig};
use pnn_core::harness::output::{emit_plotdata, read_table, CsvSink, PlotManifest};
use pnn_core::harness::sweep::{execute, plan, run_job, Experiment, ResultRow, RowSink};
use pnn_core::optics::ReservoirParams;
use pnn_core::{Error, Result};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        reservoir: ReservoirParams {
            sites: 256,
            nodes: 64,
            ..ReservoirParams::default()
        },
        ..ExperimentConfig::default()
    };
    cfg.encoder.grid_side_px = 32;
    cfg.encoder.disk_radius_px = 15.0;
    cfg.encoder.sequence_length = 100;
    cfg.encoder.test_length = 50;
    cfg.training.epochs = 20;
    cfg.metrics.consistency_repetitions = 3;
    cfg.run.master_seed = 9;
    cfg
}

fn segments() -> Vec<(String, Vec<Axis>)> {
    vec![(
        "wavelength".into(),
        vec![
            Axis::new("power_ratio", vec![0.4, 1.2]),
            Axis::new("delta_lambda_nm", vec![-0.2, 0.0, 0.2]),
        ],
    )]
}

#[test]
fn rows_reproduce_in_isolation_and_in_any_order() {
    let cfg = small();
    let jobs = plan(&segments(), 2);
    let mut sink = Vec::new();
    let rows = execute(&cfg, Experiment::Train, &jobs, &mut sink).unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(sink, rows);
    for job in jobs.iter().rev() {
        let alone = run_job(&cfg, Experiment::Train, job);
        let full = &rows[job.point * 2 + job.repetition];
        assert_eq!(alone.seed, full.seed);
        assert_eq!(alone.nmse, full.nmse);
        assert_eq!(alone.ser, full.ser);
    }
    // Distinct points get distinct seeds; repetitions share a device.
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), rows.len());
    assert!(rows.iter().filter(|r| r.repetition == 0).all(|r| r.device_seed == rows[0].device_seed));
}

/// Forwards to a CSV sink and then stops, like an interrupted run.
struct Interrupt {
    inner: CsvSink,
    left: usize,
}

impl RowSink for Interrupt {
    fn accept(&mut self, row: &ResultRow) -> Result<()> {
        if self.left == 0 {
            return Err(Error::Numeric("interrupted".into()));
        }
        self.left -= 1;
        self.inner.accept(row)
    }
}

#[test]
fn interrupted_sweep_leaves_valid_prefix() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let jobs = plan(&segments(), 1);
    let mut sink = Interrupt {
        inner: CsvSink::create(dir.path()).unwrap(),
        left: 4,
    };
    assert!(execute(&cfg, Experiment::Probe, &jobs, &mut sink).is_err());
    let partial = read_table(&dir.path().join("results.csv")).unwrap();
    assert_eq!(partial.len(), 4);

    let full = execute(&cfg, Experiment::Probe, &jobs, &mut Vec::new()).unwrap();
    for (p, f) in partial.iter().zip(&full) {
        assert_eq!(p.point, f.point);
        assert_eq!(p.d, f.d);
    }
}

#[test]
fn wavelength_plot_schema_and_manifest() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let rows = execute(&cfg, Experiment::Train, &plan(&segments(), 1), &mut Vec::new()).unwrap();
    let path = emit_plotdata(
        &rows,
        &["delta_lambda_nm", "power_ratio"],
        Some(&["nmse"]),
        "fig2b",
        Some("Fig2b"),
        dir.path(),
    )
    .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("delta_lambda_nm,power_ratio,nmse,seed"));
    assert_eq!(text.lines().count(), 1 + rows.len());
    let manifest: PlotManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.figure.as_deref(), Some("Fig2b"));
    assert_eq!(manifest.axes[0].unit, "nm (relative to 918.9 nm)");
}

#[test]
fn bad_selections_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plots");
    let err = emit_plotdata(&[], &["power_ratio"], None, "x", None, &out).unwrap_err();
    assert_eq!(err.kind(), "empty_selection");
    let rows = execute(&small(), Experiment::Probe, &plan(&segments(), 1), &mut Vec::new()).unwrap();
    let err = emit_plotdata(&rows, &["colour"], None, "x", None, &out).unwrap_err();
    assert_eq!(err.kind(), "unknown_axis");
    let err = emit_plotdata(&rows, &["power_ratio"], Some(&["nmse_typo"]), "x", None, &out).unwrap_err();
    assert_eq!(err.kind(), "unknown_axis");
    assert!(!out.exists());
}

#[test]
fn config_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.sweep.axes = segments().remove(0).1;
    let path = dir.path().join("c.toml");
    cfg.save(&path).unwrap();
    assert_eq!(parse_config(&path).unwrap(), cfg);
    let err = parse_config(&dir.path().join("absent.toml")).unwrap_err();
    assert_eq!(err.kind(), "io");
}
