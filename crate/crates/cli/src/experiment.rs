//! Runs every user position through every sweep point and writes the tables.

use std::path::{Path, PathBuf};
use std::time::Instant;

use momp_core::channel::PathParams;
use momp_core::locate::{localize, LocationFix};
use momp_core::momp::{flatten_measurement, omp_solve, SolverConfig};
use momp_core::pipeline::Link;
use momp_core::scenario::{trace_paths, Placement, Room};
use momp_core::tensor::{kron_flatten, DEFAULT_FLATTEN_CAP};
use momp_core::Complex64;
use nalgebra::{DMatrix, Vector3};

use crate::config::{ExperimentConfig, SweepPoint};
use crate::metrics::{angular_error, nmse_db, percentile, secondary_delay_error, SUMMARY_PERCENTILES};
use crate::{CliError, Result};

/// Metrics for one user position at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionRecord {
    pub id: usize,
    pub truth: Vector3<f64>,
    pub fix: LocationFix,
    pub doa_error_rad: Option<f64>,
    pub dod_error_rad: Option<f64>,
    pub nmse_db: Option<f64>,
    /// `None` when fewer than two true paths reach the arrays.
    pub secondary_delay_error_s: Option<f64>,
    pub localization_error_m: Option<f64>,
    pub omp_nmse_db: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    /// Training frames actually used.
    pub frames: usize,
    pub records: Vec<PositionRecord>,
}

impl PointResult {
    pub fn detection_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let hits = self.records.iter().filter(|r| r.fix.is_located()).count();
        hits as f64 / self.records.len() as f64
    }

    /// Values of one summary metric, skipping positions where it is undefined.
    pub fn metric(&self, name: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| match name {
                "doa_error_rad" => r.doa_error_rad,
                "dod_error_rad" => r.dod_error_rad,
                "nmse_db" => r.nmse_db,
                "secondary_delay_error_s" => r.secondary_delay_error_s,
                "localization_error_m" => r.localization_error_m,
                "omp_nmse_db" => r.omp_nmse_db,
                _ => None,
            })
            .collect()
    }
}

pub const SUMMARY_METRICS: [&str; 6] = [
    "doa_error_rad",
    "dod_error_rad",
    "nmse_db",
    "secondary_delay_error_s",
    "localization_error_m",
    "omp_nmse_db",
];

pub const POINT_HEADER: [&str; 19] = [
    "position_id",
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
    "detected",
    "doa_error_rad",
    "dod_error_rad",
    "nmse_db",
    "secondary_delay_error_s",
    "localization_error_m",
    "omp_nmse_db",
];

/// Noise seed for one position at one sweep point (splitmix64 finalizer
/// over the master seed and both indices).
pub fn noise_seed(master: u64, point: usize, position: usize) -> u64 {
    let mut z = master;
    for v in [point as u64, position as u64] {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(v);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Flattened OMP for the same observation, when its matrices fit.
struct OmpOracle {
    flat_measurement: DMatrix<Complex64>,
    flat_dictionary: DMatrix<Complex64>,
    solver: SolverConfig,
}

impl OmpOracle {
    fn try_new(link: &Link) -> Option<Self> {
        let rows = link.measurement.shape()[0] as u128;
        let entries: u128 = link.dicts.atom_sizes().iter().map(|&n| n as u128).product();
        let atoms: u128 = link.dicts.atom_counts().iter().map(|&n| n as u128).product();
        let cap = DEFAULT_FLATTEN_CAP as u128;
        if rows * atoms > cap || entries * atoms > cap {
            log::warn!("OMP oracle disabled: flattened dictionary has {atoms} columns, over the {cap}-entry cap");
            return None;
        }
        let flat_dictionary = kron_flatten(&link.dicts, DEFAULT_FLATTEN_CAP).ok()?;
        Some(Self {
            flat_measurement: flatten_measurement(&link.measurement),
            flat_dictionary,
            solver: SolverConfig {
                init_order: None,
                ..link.cfg.solver.clone()
            },
        })
    }

    fn taps(&self, link: &Link, observation: &DMatrix<Complex64>) -> momp_core::Result<Vec<DMatrix<Complex64>>> {
        let sol = omp_solve(observation, &self.flat_measurement, &self.flat_dictionary, &self.solver)?;
        let sizes = link.dicts.atom_sizes();
        let (n_r, n_t, taps) = (sizes[0] * sizes[1], sizes[2] * sizes[3], sizes[4]);
        let scale = 1.0 / link.training.tx_power_w.sqrt();
        let mut h = vec![DMatrix::zeros(n_r, n_t); taps];
        for (l, ix) in sol.support.iter().enumerate() {
            let c = sol.coefficients[(l, 0)] * scale;
            let col = self.flat_dictionary.column(ix[0]);
            for r in 0..n_r {
                for t in 0..n_t {
                    for (d, hd) in h.iter_mut().enumerate() {
                        hd[(r, t)] += c * col[(r * n_t + t) * taps + d];
                    }
                }
            }
        }
        Ok(h)
    }
}

fn strongest_two(paths: &[PathParams]) -> (Option<&PathParams>, Option<&PathParams>) {
    let mut sorted: Vec<&PathParams> = paths.iter().collect();
    sorted.sort_by(|a, b| b.gain.norm().total_cmp(&a.gain.norm()));
    (sorted.first().copied(), sorted.get(1).copied())
}

fn evaluate_position(
    cfg: &ExperimentConfig,
    link: &Link,
    oracle: Option<&OmpOracle>,
    room: &Room,
    point: &SweepPoint,
    id: usize,
    user: Vector3<f64>,
) -> momp_core::Result<PositionRecord> {
    let start = Instant::now();
    let anchor = cfg.anchor();
    let placement = Placement::new(room, anchor, user)?;
    let paths: Vec<PathParams> = trace_paths(room, &placement, &cfg.scenario.trace)?
        .into_iter()
        .map(|p| p.params)
        .collect();
    let seed = noise_seed(cfg.seed, point.index, id);
    let est = link.estimate(&paths, seed)?;
    let fix = localize(&est.estimates, &anchor, &cfg.classifier);

    let (main, second) = strongest_two(&est.paths);
    let main_est = est.estimates.first();
    let (doa_error_rad, dod_error_rad) = match (main, main_est) {
        (Some(t), Some(e)) => (Some(angular_error(&t.doa, &e.doa)), Some(angular_error(&t.dod, &e.dod))),
        _ => (None, None),
    };
    let secondary_delay_error_s = match (main, second) {
        (Some(m), Some(s)) => {
            let relative: Vec<f64> = est.estimates.iter().map(|e| e.relative_delay).collect();
            secondary_delay_error(s.delay, &relative, m.delay)
        }
        _ => None,
    };
    let nmse = nmse_db(&est.taps, &est.estimated_taps).ok();
    let omp_nmse_db = match oracle {
        Some(o) => {
            let (observation, _) = link.observe(&est.paths, est.tau0, seed)?;
            nmse_db(&est.taps, &o.taps(link, &observation)?).ok()
        }
        None => None,
    };
    let localization_error_m = fix.position.map(|p| (p - user).norm());
    Ok(PositionRecord {
        id,
        truth: user,
        fix,
        doa_error_rad,
        dod_error_rad,
        nmse_db: nmse,
        secondary_delay_error_s,
        localization_error_m,
        omp_nmse_db,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Evaluates every position at one sweep point without writing anything.
pub fn evaluate_point(cfg: &ExperimentConfig, point: &SweepPoint) -> Result<PointResult> {
    let room = cfg.room()?;
    let link = Link::new(point.apply(&cfg.link))?;
    let oracle = if cfg.omp_oracle {
        OmpOracle::try_new(&link)
    } else {
        None
    };
    let mut records = Vec::new();
    for (id, user) in cfg.users().into_iter().enumerate() {
        let record = evaluate_position(cfg, &link, oracle.as_ref(), &room, point, id, user)
            .map_err(|source| CliError::Position { id, source })?;
        records.push(record);
    }
    Ok(PointResult {
        point: point.clone(),
        frames: link.training.m(),
        records,
    })
}

fn num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e7).contains(&x.abs()) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn point_file_name(index: usize) -> String {
    format!("point_{index:03}.csv")
}

pub fn write_point_csv(path: &Path, result: &PointResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(POINT_HEADER)?;
    for r in &result.records {
        let est = r.fix.position;
        let coord = |i: usize| est.map(|p| num(p[i])).unwrap_or_default();
        w.write_record([
            r.id.to_string(),
            num(r.truth.x),
            num(r.truth.y),
            num(r.truth.z),
            coord(0),
            coord(1),
            coord(2),
            opt(r.fix.tau0),
            r.fix.status.label().to_string(),
            r.fix.n_wall.to_string(),
            r.fix.n_floorceil.to_string(),
            r.fix.n_spurious.to_string(),
            u8::from(r.fix.is_located()).to_string(),
            opt(r.doa_error_rad),
            opt(r.dod_error_rad),
            opt(r.nmse_db),
            opt(r.secondary_delay_error_s),
            opt(r.localization_error_m),
            opt(r.omp_nmse_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn frames_label(p: &SweepPoint) -> String {
    p.frames.map(|m| m.to_string()).unwrap_or_else(|| "full".into())
}

pub fn write_summary_csv(path: &Path, results: &[PointResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["point", "tx_power_dbm", "k_res", "frames", "metric", "count"];
    let labels: Vec<String> = SUMMARY_PERCENTILES.iter().map(|p| format!("p{p}")).collect();
    header.extend(labels.iter().map(String::as_str));
    header.push("detection_rate");
    w.write_record(&header)?;
    for res in results {
        for metric in SUMMARY_METRICS {
            let values = res.metric(metric);
            let mut row = vec![
                res.point.index.to_string(),
                num(res.point.tx_power_dbm),
                num(res.point.k_res),
                res.frames.to_string(),
                metric.to_string(),
                values.len().to_string(),
            ];
            row.extend(SUMMARY_PERCENTILES.iter().map(|&p| opt(percentile(&values, p))));
            row.push(num(res.detection_rate()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_points_index(path: &Path, results: &[PointResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["point", "file", "tx_power_dbm", "k_res", "frames_requested", "frames"])?;
    for res in results {
        w.write_record([
            res.point.index.to_string(),
            point_file_name(res.point.index),
            num(res.point.tx_power_dbm),
            num(res.point.k_res),
            frames_label(&res.point),
            res.frames.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_timing(path: &Path, results: &[PointResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["point", "position_id", "wall_time_s"])?;
    for res in results {
        for r in &res.records {
            w.write_record([res.point.index.to_string(), r.id.to_string(), num(r.wall_time_s)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results: Vec<PointResult>,
    pub files: Vec<PathBuf>,
}

/// Validates `cfg`, evaluates every sweep point and writes `points.csv`, one
/// `point_NNN.csv` per sweep point, `summary.csv` and `timing.csv` under the
/// output directory. Everything except `timing.csv` is a pure function of
/// the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut results = Vec::new();
    let mut files = Vec::new();
    for point in cfg.sweep_points() {
        log::info!(
            "sweep point {}: P_t = {} dBm, K_res = {}, frames = {}",
            point.index,
            point.tx_power_dbm,
            point.k_res,
            frames_label(&point)
        );
        let res = evaluate_point(cfg, &point)?;
        let path = dir.join(point_file_name(point.index));
        write_point_csv(&path, &res)?;
        files.push(path);
        results.push(res);
    }
    for (name, write) in [
        (
            "points.csv",
            write_points_index as fn(&Path, &[PointResult]) -> Result<()>,
        ),
        ("summary.csv", write_summary_csv),
        ("timing.csv", write_timing),
    ] {
        let path = dir.join(name);
        write(&path, &results)?;
        files.push(path);
    }
    Ok(ExperimentOutput { results, files })
}
