use std::path::Path;
use std::process::Command;

use momp_cli::config::LineSweep;
use momp_cli::experiment::{noise_seed, point_file_name, SUMMARY_METRICS};
use momp_cli::metrics::{percentile, SUMMARY_PERCENTILES};
use momp_cli::{evaluate_point, presets, run_experiment, CliError, ExperimentConfig};

/// The tiny preset cut down to `n` positions and one K_res.
fn small(n: usize, dir: &Path) -> ExperimentConfig {
    let mut cfg = presets::tiny();
    cfg.scenario.line = Some(LineSweep {
        start: [1.5, 2.5, 1.0],
        end: [4.5, 6.5, 1.4],
        steps: n,
    });
    cfg.sweep.k_res = Some(vec![2.0]);
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn presets_round_trip_through_toml() {
    for p in &presets::PRESETS {
        let cfg = (p.build)();
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg, "{}", p.name);
        cfg.validate().unwrap();
    }
}

#[test]
fn config_errors_are_config_errors() {
    let base = presets::tiny();
    let mut cases = Vec::new();

    let mut c = base.clone();
    c.sweep.k_res = Some(vec![]);
    cases.push(c);

    let mut c = base.clone();
    c.scenario.users = Some(vec![[1.0, 1.0, 1.0]]);
    cases.push(c);

    let mut c = base.clone();
    c.scenario.line = None;
    cases.push(c);

    let mut c = base.clone();
    c.scenario.users = Some(vec![[1.0, 1.0, 9.0]]);
    c.scenario.line = None;
    cases.push(c);

    let mut c = base.clone();
    c.link.training.m_r = 3;
    cases.push(c);

    let mut c = base.clone();
    c.sweep.frames = Some(vec![0]);
    cases.push(c);

    let mut c = base.clone();
    c.classifier.r_el = 0.0;
    cases.push(c);

    for (i, c) in cases.iter().enumerate() {
        let err = c.validate().unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "case {i}: {err}");
        assert_eq!(err.exit_code(), 2);
    }

    let text = base.to_toml().replace("[classifier]", "[classifier]\nbogus = 1");
    assert!(matches!(ExperimentConfig::from_toml(&text), Err(CliError::Config(_))));
}

#[test]
fn sweep_points_form_the_product() {
    let mut cfg = presets::tiny();
    cfg.sweep.tx_power_dbm = Some(vec![10.0, 20.0]);
    cfg.sweep.frames = Some(vec![4, 8]);
    let pts = cfg.sweep_points();
    assert_eq!(pts.len(), 2 * 3 * 2);
    assert!(pts.iter().enumerate().all(|(i, p)| p.index == i));
    assert_eq!((pts[0].tx_power_dbm, pts[0].k_res, pts[0].frames), (10.0, 2.0, Some(4)));
    assert_eq!(
        (pts[11].tx_power_dbm, pts[11].k_res, pts[11].frames),
        (20.0, 8.0, Some(8))
    );

    let mut cfg = presets::desk();
    cfg.sweep = Default::default();
    let pts = cfg.sweep_points();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].k_res, cfg.link.k_res);
}

#[test]
fn line_sweep_includes_both_ends() {
    let cfg = small(5, Path::new("unused"));
    let users = cfg.users();
    assert_eq!(users.len(), 5);
    assert_eq!(users[0].as_slice(), &[1.5, 2.5, 1.0]);
    assert_eq!(users[4].as_slice(), &[4.5, 6.5, 1.4]);
}

#[test]
fn noise_seeds_differ_per_point_and_position() {
    let mut seen = std::collections::HashSet::new();
    for point in 0..4 {
        for pos in 0..50 {
            assert!(seen.insert(noise_seed(9, point, pos)));
        }
    }
    assert_ne!(noise_seed(1, 0, 0), noise_seed(2, 0, 0));
}

#[test]
fn same_seed_gives_byte_identical_tables() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = small(3, a.path());
    cfg.link.training.noise_dbm = Some(-81.0);
    cfg.sweep.tx_power_dbm = Some(vec![0.0, 20.0]);
    run_experiment(&cfg).unwrap();
    cfg.output_dir = b.path().to_path_buf();
    let out = run_experiment(&cfg).unwrap();
    for f in out.files.iter().filter(|f| !f.ends_with("timing.csv")) {
        let name = f.file_name().unwrap();
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{}", name.to_string_lossy());
    }

    let c = tempfile::tempdir().unwrap();
    cfg.output_dir = c.path().to_path_buf();
    cfg.seed += 1;
    run_experiment(&cfg).unwrap();
    let x = std::fs::read(a.path().join(point_file_name(0))).unwrap();
    let y = std::fs::read(c.path().join(point_file_name(0))).unwrap();
    assert_ne!(x, y, "a new seed should change the noisy results");
}

#[test]
fn summary_is_recomputable_from_point_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(4, dir.path());
    cfg.sweep.k_res = Some(vec![2.0, 4.0]);
    run_experiment(&cfg).unwrap();

    let (_, summary) = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 2 * SUMMARY_METRICS.len());
    for point in 0..2 {
        let (header, rows) = read_csv(&dir.path().join(point_file_name(point)));
        assert_eq!(rows.len(), 4);
        let ids: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(ids, ["0", "1", "2", "3"]);
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let detected = rows.iter().filter(|r| r[col("detected")] == "1").count();
        for metric in SUMMARY_METRICS {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| !r[col(metric)].is_empty())
                .map(|r| r[col(metric)].parse().unwrap())
                .collect();
            let row = summary
                .iter()
                .find(|s| s[0] == point.to_string() && s[4] == metric)
                .unwrap();
            assert_eq!(row[5], values.len().to_string());
            for (k, &p) in SUMMARY_PERCENTILES.iter().enumerate() {
                match percentile(&values, p) {
                    Some(v) => assert_eq!(row[6 + k].parse::<f64>().unwrap(), v, "{metric} p{p}"),
                    None => assert!(row[6 + k].is_empty()),
                }
            }
            let rate: f64 = row[11].parse().unwrap();
            assert_eq!(rate, detected as f64 / 4.0);
        }
    }
}

#[test]
fn point_table_has_the_location_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(2, dir.path());
    run_experiment(&cfg).unwrap();
    let (header, rows) = read_csv(&dir.path().join(point_file_name(0)));
    for name in [
        "true_x",
        "true_y",
        "true_z",
        "est_x",
        "est_y",
        "est_z",
        "tau0_est_s",
        "status",
        "n_wall",
        "n_floorceil",
        "n_spurious",
    ] {
        assert!(header.iter().any(|h| h == name), "{name}");
    }
    for r in &rows {
        let status = &r[8];
        assert!(status == "located" || status.starts_with("no_detection:"));
        assert_eq!(r[4].is_empty(), status != "located");
    }
    let (_, timing) = read_csv(&dir.path().join("timing.csv"));
    assert_eq!(timing.len(), 2);
    assert!(timing.iter().all(|t| t[2].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn omp_oracle_runs_small_and_switches_off_large() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(2, dir.path());
    cfg.omp_oracle = true;
    let res = evaluate_point(&cfg, &cfg.sweep_points()[0]).unwrap();
    for r in &res.records {
        let omp = r.omp_nmse_db.unwrap();
        assert!(omp.is_finite() && omp < 0.0);
    }

    cfg.sweep.k_res = Some(vec![8.0]);
    let res = evaluate_point(&cfg, &cfg.sweep_points()[0]).unwrap();
    assert!(res.records.iter().all(|r| r.omp_nmse_db.is_none()));
}

#[test]
fn median_doa_error_does_not_grow_with_k_res() {
    let cfg = presets::tiny();
    let medians: Vec<f64> = cfg
        .sweep_points()
        .iter()
        .map(|p| percentile(&evaluate_point(&cfg, p).unwrap().metric("doa_error_rad"), 50.0).unwrap())
        .collect();
    assert_eq!(medians.len(), 3);
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn lattice_preset_detects_with_exact_wall_delay() {
    let cfg = presets::lattice();
    let res = evaluate_point(&cfg, &cfg.sweep_points()[0]).unwrap();
    assert_eq!(res.detection_rate(), 1.0);
    let r = &res.records[0];
    // both the first and second arrivals land on delay atoms
    assert!(r.secondary_delay_error_s.unwrap() < 1e-18);
    assert_eq!(r.fix.n_spurious, 0);
}

#[test]
fn unreachable_position_aborts_with_its_id() {
    let mut cfg = small(1, Path::new("unused"));
    // behind the access point's wall mount: no path reaches it
    cfg.scenario.anchor = [3.0, 7.9, 2.5];
    cfg.scenario.line = None;
    cfg.scenario.users = Some(vec![[2.0, 4.0, 1.0], [1.0, 1.0, 1.0]]);
    let err = evaluate_point(&cfg, &cfg.sweep_points()[0]).unwrap_err();
    assert!(matches!(err, CliError::Position { id: 0, .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

fn momp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_momp"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    let mut cfg = small(1, &dir.path().join("out"));
    std::fs::write(&good, cfg.to_toml()).unwrap();
    let bad = dir.path().join("bad.toml");
    cfg.sweep.k_res = Some(vec![0.5]);
    std::fs::write(&bad, cfg.to_toml()).unwrap();
    let full = dir.path().join("full.toml");
    let mut p = presets::full();
    p.output_dir = dir.path().join("full_out");
    std::fs::write(&full, p.to_toml()).unwrap();

    let out = momp(&["presets"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("full"));
    assert_eq!(momp(&["presets", "tiny"]).status.code(), Some(0));
    assert_eq!(momp(&["presets", "nope"]).status.code(), Some(2));

    assert_eq!(momp(&["validate", good.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(momp(&["validate", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(momp(&["validate", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(momp(&["frobnicate"]).status.code(), Some(2));

    assert_eq!(momp(&["run", good.to_str().unwrap()]).status.code(), Some(0));
    assert!(dir.path().join("out").join("summary.csv").exists());
    assert_eq!(momp(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    // full-scale measurement tensor is over the memory cap
    assert_eq!(momp(&["run", full.to_str().unwrap()]).status.code(), Some(3));
}
