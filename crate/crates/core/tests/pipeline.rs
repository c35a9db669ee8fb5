mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::{Days, NaiveDate};
use rand::Rng;

use svar_lu::cli::config::{InputSpec, SeriesSpec};
use svar_lu::cli::export::read_matrix_csv;
use svar_lu::cli::transform::Transform;
use svar_lu::cli::{run_fit, run_simulate, run_transform, RunConfig};
use svar_lu::simulation::{generate_svar, ReplicationConfig, SvarDgp};
use svar_lu::{ColumnSelection, Mat, SvarError, TimeSeriesPanel};

fn write_panel(path: &Path, names: &[&str], values: &Mat) {
    let start = NaiveDate::from_ymd_opt(1950, 1, 1).unwrap();
    let mut f = std::fs::File::create(path).unwrap();
    writeln!(f, "DATE,{}", names.join(",")).unwrap();
    for i in 0..values.nrows() {
        let row: Vec<String> = values.row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(f, "{},{}", start + Days::new(i as u64), row.join(",")).unwrap();
    }
}

fn wide_input(path: PathBuf) -> InputSpec {
    InputSpec {
        path,
        date_column: None,
        series: Vec::new(),
    }
}

/// Two series from a structural VAR(1) with `A₀[2,1] = 0.4` and a slowly
/// decaying oscillation, so the signal dwarfs innovations of size `noise`.
fn oscillating_panel(noise: f64, n: usize) -> Mat {
    let q = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.4, 1.0]);
    let a = Mat::from_row_slice(2, 3, &[1.0, 0.9, -0.5, -1.0, 0.0, 1.1]);
    let b = &q * &a;
    let mut r = common::rng(11);
    let mut y = Mat::zeros(n, 2);
    y[(0, 0)] = 500.0;
    y[(0, 1)] = -300.0;
    for t in 1..n {
        let v = nalgebra::DVector::from_fn(2, |_, _| noise * r.random_range(-1.0..1.0));
        let e = &q * v;
        for i in 0..2 {
            y[(t, i)] = b[(i, 0)] + b[(i, 1)] * y[(t - 1, 0)] + b[(i, 2)] * y[(t - 1, 1)] + e[i];
        }
    }
    y
}

#[test]
fn near_exact_data_recovers_structure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("exact.csv");
    write_panel(&csv, &["x", "y"], &oscillating_panel(1e-4, 201));
    let cfg = RunConfig {
        inputs: vec![wide_input(csv)],
        lag: 1,
        jtuple: Some(ColumnSelection::new(vec![2, 3]).unwrap()),
        horizons: 5,
        ..Default::default()
    };
    let est = run_fit(&cfg, &dir.path().join("out")).unwrap();
    assert_eq!(est.fit.t_obs, 200);
    assert!((est.structural.a0_hat()[(1, 0)] - 0.4).abs() < 1e-5);
    assert!(est.structural.a0_hat()[(0, 1)] == 0.0);
    for s in &est.accuracy.series {
        assert!(1.0 - s.r_squared.unwrap() < 1e-9, "{s:?}");
        assert!(s.adjusted_r_squared.unwrap() <= 1.0);
    }
    assert_eq!(est.tests.len(), 3);
    for t in &est.tests {
        assert!(t.p_value.is_finite() && (0.0..=1.0).contains(&t.p_value));
    }
    assert!(est.tests[0].p_value < 1e-6);
}

#[test]
fn fit_writes_bundle_and_exact_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let dgp = SvarDgp::reference();
    let panel = generate_svar(&dgp, 200, 500, 5).unwrap();
    let csv = dir.path().join("sim.csv");
    write_panel(&csv, &["a", "b", "c", "d", "e"], panel.values());
    let cfg = RunConfig {
        inputs: vec![wide_input(csv)],
        lag: 5,
        jtuple: Some(dgp.selection.clone()),
        horizons: 8,
        ..Default::default()
    };
    let out = dir.path().join("out");
    let est = run_fit(&cfg, &out).unwrap();
    for name in [
        "fit.json", "b_hat.csv", "sigma_hat.csv", "sigma_b_hat.csv", "q_hat.csv", "a0_hat.csv", "a_hat.csv",
        "sigma1.csv", "sigma2.csv", "sigma3.csv", "irf.csv", "accuracy.csv",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    for (name, m) in [
        ("b_hat", &est.fit.b_hat),
        ("q_hat", est.structural.q_hat()),
        ("sigma2", &est.structural.sigma2),
        ("sigma_b_hat", &est.fit.sigma_b_hat),
    ] {
        let back = read_matrix_csv(&out.join(format!("{name}.csv"))).unwrap();
        assert_eq!(back.shape(), m.shape());
        assert!(back.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()), "{name}");
    }

    let bundle: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(bundle["t_obs"], 200);
    assert_eq!(bundle["selection"], serde_json::json!([2, 3, 4, 5, 6]));
    assert_eq!(bundle["tests"].as_array().unwrap().len(), 3);
    let b_json: Vec<Vec<f64>> = serde_json::from_value(bundle["b_hat"].clone()).unwrap();
    assert_eq!(b_json[2][7].to_bits(), est.fit.b_hat[(2, 7)].to_bits());

    let irf_rows = std::fs::read_to_string(out.join("irf.csv")).unwrap().lines().count();
    assert_eq!(irf_rows, 1 + 9 * 2 * 25);
    for s in &est.accuracy.series {
        let adj = s.adjusted_r_squared.unwrap();
        assert!(adj.is_finite() && adj < 1.0);
        assert!(s.rmse >= 0.0 && s.series_sd > 0.0 && s.fitted_sd > 0.0);
    }
    let psi0 = &est.irf.psi[0];
    assert_eq!(psi0, &Mat::identity(5, 5));
}

#[test]
fn transform_command_aligns_series() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("levels.csv");
    std::fs::write(&a, "DATE,U\n2000-01-01,100\n2000-04-01,102\n2000-07-01,102\n").unwrap();
    let b = dir.path().join("rates.csv");
    std::fs::write(&b, "observation_date,R\n2000-01-01,3.0\n2000-04-01,2.5\n2000-07-01,2.5\n2000-10-01,2.0\n").unwrap();
    let cfg = RunConfig {
        inputs: vec![
            InputSpec {
                path: a,
                date_column: Some("DATE".into()),
                series: vec![SeriesSpec {
                    column: "U".into(),
                    name: Some("unemployment".into()),
                    transform: Transform::PctChange,
                }],
            },
            InputSpec {
                path: b,
                date_column: None,
                series: vec![SeriesSpec {
                    column: "R".into(),
                    name: None,
                    transform: Transform::Difference,
                }],
            },
        ],
        ..Default::default()
    };
    let panel: TimeSeriesPanel = run_transform(&cfg, dir.path()).unwrap();
    assert_eq!(panel.time_labels(), &["2000-04-01", "2000-07-01"]);
    assert_eq!(panel.series_names(), &["unemployment", "R"]);
    assert_eq!(panel.values()[(0, 1)], -0.5);
    assert_eq!(panel.values()[(1, 0)], 0.0);
    let text = std::fs::read_to_string(dir.path().join("panel.csv")).unwrap();
    assert!(text.starts_with("date,unemployment,R\n2000-04-01,"));
}

#[test]
fn simulate_smoke_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.simulation.replication = ReplicationConfig {
        sample_sizes: vec![80, 120],
        reps: 10,
        seed: 99,
        burn_in: 200,
        ..Default::default()
    };
    let r1 = run_simulate(&cfg, &dir.path().join("a")).unwrap();
    for s in &r1.results {
        assert!(s.tail.iter().chain(&s.rejection).all(|x| (0.0..=1.0).contains(&x.rate)));
    }
    cfg.simulation.replication.threads = Some(1);
    run_simulate(&cfg, &dir.path().join("b")).unwrap();
    for f in ["simulation.json", "draws_T80.csv", "draws_T120.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn identical_series_are_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("dup.csv");
    let mut r = common::rng(2);
    let x: Vec<f64> = (0..50).map(|_| r.random_range(-1.0..1.0)).collect();
    let m = Mat::from_fn(50, 2, |i, _| x[i]);
    write_panel(&csv, &["x", "y"], &m);
    let cfg = RunConfig {
        inputs: vec![wide_input(csv)],
        lag: 1,
        jtuple: Some(ColumnSelection::new(vec![2, 3]).unwrap()),
        ..Default::default()
    };
    let err = run_fit(&cfg, &dir.path().join("out")).unwrap_err();
    assert!(matches!(err, SvarError::SingularDesign { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_svar-lu"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    write_panel(&csv, &["x", "y"], &oscillating_panel(1.0, 120));
    let out = dir.path().join("out");
    let status = |args: &[&str]| cli().args(args).output().unwrap().status.code().unwrap();

    let ok = cli()
        .args(["fit", "--input", csv.to_str().unwrap(), "--lag", "1", "--jtuple", "2,3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("z3"));
    assert!(out.join("fit.json").exists());

    let o = out.to_str().unwrap();
    let c = csv.to_str().unwrap();
    assert_eq!(status(&["test", "--input", c, "--lag", "1", "--jtuple", "2,3", "--out", o]), 0);
    assert_eq!(status(&["irf", "--input", c, "--lag", "1", "--jtuple", "2,3", "--horizons", "4", "--out", o]), 0);
    assert_eq!(status(&["fit", "--input", c, "--lag", "1", "--out", o]), 2);
    assert_eq!(status(&["fit", "--input", c, "--lag", "1", "--jtuple", "2,9", "--out", o]), 2);
    assert_eq!(status(&["fit", "--input", c, "--lag", "1", "--jtuple", "2,3", "--level", "1.5", "--out", o]), 2);
    assert_eq!(status(&["fit", "--nonsense"]), 2);
    let missing = dir.path().join("nope.csv");
    assert_eq!(status(&["fit", "--input", missing.to_str().unwrap(), "--jtuple", "2,3", "--out", o]), 4);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "DATE,x,y\n2000-01-01,1,2\n1999-01-01,1,2\n").unwrap();
    assert_eq!(status(&["fit", "--input", bad.to_str().unwrap(), "--jtuple", "2,3", "--out", o]), 4);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"lagg": 3}"#).unwrap();
    assert_eq!(status(&["fit", "--config", cfg.to_str().unwrap(), "--out", o]), 2);

    // Two identical series make the design singular.
    let dup = dir.path().join("dup.csv");
    let m = Mat::from_fn(40, 2, |i, _| ((i * 7919) % 13) as f64);
    write_panel(&dup, &["x", "y"], &m);
    assert_eq!(status(&["fit", "--input", dup.to_str().unwrap(), "--lag", "1", "--jtuple", "2,3", "--out", o]), 3);
}

#[test]
fn cli_simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    std::fs::write(
        &cfg,
        r#"{"simulation": {"dgp": "reference-null", "sample_sizes": [100], "reps": 12, "burn_in": 100}}"#,
    )
    .unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = cli()
            .args(["simulate", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("simulation.json")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["null_holds"], true);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            cfg.simulation.dgp.build().unwrap();
            seen += 1;
        }
    }
    assert_eq!(seen, 4);

    let custom = RunConfig::from_file(&dir.join("simulation_custom.json")).unwrap();
    assert_eq!(custom.simulation.dgp.build().unwrap(), SvarDgp::reference());
    let null = RunConfig::from_file(&dir.join("simulation_null.json")).unwrap();
    assert_eq!(null.simulation.dgp.build().unwrap(), SvarDgp::reference_null());
}
