use std::fs;
use std::path::Path;
use std::process::Command;

use surfverify::config::{ExperimentConfig, Overrides};
use surfverify::plot::{series, MAX_PLOT_ROWS};
use surfverify::run::{run, RunOptions, COEFFICIENTS_FILE, SUMMARY_FILE, TRAJECTORY_FILE};
use surfverify::table::{parse_rows, run_table};
use surfverify::HarnessError;
use surfverify_core::evolve::read_binary;
use surfverify_core::{InitialDatum, Method};
use tempfile::tempdir;

fn config(u0: &str, n: usize, dt: f64, t_end: f64, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(u0.parse().unwrap(), n, dt);
    cfg.t_end = Some(t_end);
    cfg.output_dir = Some(dir.to_path_buf());
    cfg
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_FILE)).unwrap()).unwrap()
}

#[test]
fn zero_datum_is_trivially_regular() {
    let dir = tempdir().unwrap();
    let report = run(&config("0", 8, 0.01, 0.2, dir.path()), RunOptions::default()).unwrap();
    assert_eq!(report.verdicts.len(), 3);
    for v in &report.verdicts {
        assert_eq!(v.smallness_time(), Some(0.0));
        assert!(v.globally_regular());
    }
    let json = summary(dir.path());
    for v in json["verdicts"].as_array().unwrap() {
        for key in ["method", "smallness_time", "time_criterion", "valid_until", "t_star", "globally_regular"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
    for m in Method::ALL {
        let name = json["bound_files"][m.key()].as_str().unwrap();
        assert!(dir.path().join(name).exists());
    }
    assert!(dir.path().join(COEFFICIENTS_FILE).exists());
}

#[test]
fn outputs_are_reproducible() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let mut cfg = config("sin(x) + 1/2 sin(2x)", 16, 1e-3, 0.3, a.path());
    cfg.restart_stride = 4;
    cfg.snapshot_stride = 3;
    run(&cfg, RunOptions::default()).unwrap();
    cfg.output_dir = Some(b.path().to_path_buf());
    run(&cfg, RunOptions::default()).unwrap();
    for name in [COEFFICIENTS_FILE, "bound_m1.csv", "bound_m2.csv", "bound_m3.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_echo_reproduces_report() {
    let dir = tempdir().unwrap();
    let mut cfg = config("sin(2x)", 16, 1e-3, 0.1, dir.path());
    cfg.methods = vec![Method::M2, Method::M3];
    let first = run(&cfg, RunOptions::default()).unwrap();
    let json = summary(dir.path());
    let echo: ExperimentConfig = serde_json::from_value(json["config"].clone()).unwrap();
    let mut again = run(&echo, RunOptions::default()).unwrap();
    again.timings = first.timings.clone();
    assert_eq!(again, first);
}

#[test]
fn default_horizon_follows_t_star() {
    let dir = tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(InitialDatum::zero(), 4, 0.05);
    cfg.output_dir = Some(dir.path().to_path_buf());
    let report = run(&cfg, RunOptions::default()).unwrap();
    assert_eq!(report.config.t_end, Some(0.1));
    assert_eq!(report.steps, 2);
}

#[test]
fn bound_csv_layout() {
    let dir = tempdir().unwrap();
    let mut cfg = config("sin(x)", 16, 0.01, 0.1, dir.path());
    cfg.restart_stride = 3;
    run(&cfg, RunOptions::default()).unwrap();
    let text = fs::read_to_string(dir.path().join("bound_m3.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,bound_sq,phi_h1,valid");
    // cells end at steps 3, 6, 9 and the partial cell at 10
    assert_eq!(lines.len(), 1 + 5);
    let m2 = fs::read_to_string(dir.path().join("bound_m2.csv")).unwrap();
    assert_eq!(m2.lines().count(), 1 + 11);
    let coeffs = fs::read_to_string(dir.path().join(COEFFICIENTS_FILE)).unwrap();
    assert!(coeffs.starts_with("t_start,t_end,res_hm1_sq_int,phixx_linf_sq_int,phixx_linf_left,phixx_linf_right\n"));
    assert_eq!(coeffs.lines().count(), 1 + 10);
}

#[test]
fn trajectory_export_is_thinned() {
    let dir = tempdir().unwrap();
    let mut cfg = config("sin(x)", 8, 0.01, 0.1, dir.path());
    cfg.snapshot_stride = 5;
    cfg.write_trajectory = true;
    run(&cfg, RunOptions::default()).unwrap();
    let (spacing, snaps) = read_binary(fs::File::open(dir.path().join(TRAJECTORY_FILE)).unwrap()).unwrap();
    assert!((spacing - 0.05).abs() < 1e-15);
    assert_eq!(snaps.len(), 3);
    assert_eq!(snaps[0], InitialDatum::sin(1, 1.0).to_field(8).unwrap());
}

#[test]
fn long_runs_need_permission() {
    let dir = tempdir().unwrap();
    let cfg = config("sin(x)", 8, 1e-6, 1.5, dir.path());
    assert!(matches!(run(&cfg, RunOptions::default()), Err(HarnessError::TooLong { steps: 1_500_000 })));
}

#[test]
fn divergence_aborts_with_time() {
    let dir = tempdir().unwrap();
    let cfg = config("50 sin(x)", 16, 0.01, 5.0, dir.path());
    let err = run(&cfg, RunOptions::default()).unwrap_err().to_string();
    assert!(err.contains("non-finite at t ="), "{err}");
}

#[test]
fn table_records_row_failures() {
    let rows = parse_rows(
        r#"
[[row]]
initial_data = "sin(x)"
n_modes = 16
dt = 1e-3
t_end = 0.05

[[row]]
initial_data = "sin(x)"
n_modes = 16
dt = 1e-7
t_end = 1.0
"#,
    )
    .unwrap();
    let dir = tempdir().unwrap();
    let (result, csv) = run_table(&rows, dir.path(), Overrides::default(), RunOptions::default()).unwrap();
    assert!(result[0].outcome.is_ok());
    assert!(result[1].outcome.as_ref().unwrap_err().contains("--long"));
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().contains("--long"));
    assert!(dir.path().join("row1").join(SUMMARY_FILE).exists());
    assert!(dir.path().join("table.txt").exists());
}

#[test]
fn plot_series_of_zero_run() {
    let dir = tempdir().unwrap();
    run(&config("0", 4, 0.01, 0.1, dir.path()), RunOptions::default()).unwrap();
    let files = series(dir.path()).unwrap();
    assert_eq!(files.len(), 2 + 3);
    for f in files {
        let mut reader = csv::Reader::from_path(&f).unwrap();
        for rec in reader.records() {
            let rec = rec.unwrap();
            // every trace but the time column and the validity flag is zero
            for (i, field) in rec.iter().enumerate().skip(1) {
                if field != "1" || i + 1 != rec.len() {
                    assert_eq!(field.parse::<f64>().unwrap(), 0.0, "{}", f.display());
                }
            }
        }
    }
}

#[test]
fn plot_series_is_downsampled() {
    let dir = tempdir().unwrap();
    let mut cfg = config("sin(x)", 4, 1e-5, 0.25, dir.path());
    cfg.methods = vec![Method::M2];
    run(&cfg, RunOptions::default()).unwrap();
    for f in series(dir.path()).unwrap() {
        let rows = fs::read_to_string(&f).unwrap().lines().count() - 1;
        assert!(rows <= MAX_PLOT_ROWS, "{}: {rows}", f.display());
        assert!(rows > MAX_PLOT_ROWS / 2);
    }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_surfverify")).args(args).output().unwrap()
}

#[test]
fn cli_rejects_unknown_keys_and_large_wavenumbers() {
    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "initial_data = \"sin(x)\"\nn_modes = 8\ndt = 0.1\nsmoothing = 2\n").unwrap();
    let out = cli(&["run", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("smoothing"));

    fs::write(&bad, "initial_data = \"sin(12x)\"\nn_modes = 8\ndt = 0.1\n").unwrap();
    let out = cli(&["run", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("initial_data"));
}

#[test]
fn cli_run_table_series() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg,
        "initial_data = \"sin(x)\"\nn_modes = 8\ndt = 0.01\nt_end = 0.2\nmethods = [\"m2\"]\n",
    )
    .unwrap();
    let out = cli(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--linf",
        "coeff",
        "--kstar",
        "strict",
        "--tstar",
        "table",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = summary(&out_dir);
    assert_eq!(json["config"]["linf_mode"], "coeff");
    assert_eq!(json["config"]["kstar_mode"], "strict");
    assert_eq!(json["config"]["t_star_mode"], "table");

    let out = cli(&["series", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out_dir.join("plot").join("smallness_m2.csv").exists());

    let rows = dir.path().join("rows.toml");
    fs::write(&rows, "").unwrap();
    let table_dir = dir.path().join("table");
    let out = cli(&["table", rows.to_str().unwrap(), "--out", table_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(table_dir.join("table.csv")).unwrap().lines().count(), 1);

    let out = cli(&["run", cfg.to_str().unwrap(), "--linf", "max"]);
    assert!(!out.status.success());
}
