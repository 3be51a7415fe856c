//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! output_dir = "results"
//!
//! [scenario]
//! room = [6.0, 8.0, 3.0]
//! anchor = [3.0, 0.1, 2.5]
//! users = [[2.0, 4.0, 1.0], [4.0, 6.0, 1.2]]
//!
//! [link]
//! k_res = 4.0
//! [link.tx]
//! nx = 2
//! ny = 2
//! mount = "neg_y"
//! # ...
//!
//! [sweep]
//! tx_power_dbm = [10.0, 20.0]
//! k_res = [2.0, 4.0]
//! ```

use std::path::{Path, PathBuf};

use momp_core::channel::TrainingParams;
use momp_core::locate::ClassifierThresholds;
use momp_core::pipeline::LinkConfig;
use momp_core::scenario::{Placement, Room, TraceOptions};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every noise stream is derived from it.
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Also run flattened OMP where its dictionary fits in memory.
    #[serde(default)]
    pub omp_oracle: bool,
    pub scenario: ScenarioConfig,
    pub link: LinkConfig,
    #[serde(default)]
    pub classifier: ClassifierThresholds,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Room extents `[lx, ly, lz]` in meters.
    pub room: [f64; 3],
    pub anchor: [f64; 3],
    /// Explicit user positions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<[f64; 3]>>,
    /// Evenly spaced user positions on a segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<LineSweep>,
    #[serde(default)]
    pub trace: TraceOptions,
}

/// `steps` positions from `start` to `end`, both included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSweep {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub steps: usize,
}

/// Sweep axes. An omitted axis takes the single value from `[link]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_res: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<usize>>,
}

/// One combination of sweep-axis values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub tx_power_dbm: f64,
    pub k_res: f64,
    /// `None` keeps the full training sweep.
    pub frames: Option<usize>,
}

impl SweepPoint {
    pub fn apply(&self, base: &LinkConfig) -> LinkConfig {
        LinkConfig {
            k_res: self.k_res,
            training: TrainingParams {
                tx_power_dbm: self.tx_power_dbm,
                frames: self.frames,
                ..base.training.clone()
            },
            ..base.clone()
        }
    }
}

fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn room(&self) -> Result<Room> {
        let [lx, ly, lz] = self.scenario.room;
        Ok(Room::new(lx, ly, lz)?)
    }

    pub fn anchor(&self) -> Vector3<f64> {
        vec3(self.scenario.anchor)
    }

    pub fn users(&self) -> Vec<Vector3<f64>> {
        match (&self.scenario.users, &self.scenario.line) {
            (Some(users), _) => users.iter().copied().map(vec3).collect(),
            (None, Some(line)) => {
                let (a, b) = (vec3(line.start), vec3(line.end));
                if line.steps == 1 {
                    return vec![a];
                }
                (0..line.steps)
                    .map(|i| a + (b - a) * (i as f64 / (line.steps - 1) as f64))
                    .collect()
            }
            (None, None) => Vec::new(),
        }
    }

    /// Cartesian product of the sweep axes, power outermost.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let powers = self
            .sweep
            .tx_power_dbm
            .clone()
            .unwrap_or_else(|| vec![self.link.training.tx_power_dbm]);
        let k_res = self.sweep.k_res.clone().unwrap_or_else(|| vec![self.link.k_res]);
        let frames: Vec<Option<usize>> = match &self.sweep.frames {
            Some(f) => f.iter().map(|&m| Some(m)).collect(),
            None => vec![self.link.training.frames],
        };
        let mut out = Vec::new();
        for &p in &powers {
            for &k in &k_res {
                for &m in &frames {
                    out.push(SweepPoint {
                        index: out.len(),
                        tx_power_dbm: p,
                        k_res: k,
                        frames: m,
                    });
                }
            }
        }
        out
    }

    /// Checks everything that can be checked without building a link.
    pub fn validate(&self) -> Result<()> {
        let room = self.room()?;
        match (&self.scenario.users, &self.scenario.line) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either scenario.users or scenario.line, not both".into(),
                ))
            }
            (None, None) => return Err(CliError::Config("scenario needs users or line".into())),
            (Some(u), None) if u.is_empty() => return Err(CliError::Config("scenario.users is empty".into())),
            (None, Some(l)) if l.steps == 0 => {
                return Err(CliError::Config("scenario.line.steps must be at least 1".into()))
            }
            _ => {}
        }
        let anchor = self.anchor();
        for (i, u) in self.users().into_iter().enumerate() {
            Placement::new(&room, anchor, u).map_err(|e| CliError::Config(format!("user position {i}: {e}")))?;
        }
        let t = &self.scenario.trace;
        if !(t.wavelength_m > 0.0 && t.wavelength_m.is_finite()) {
            return Err(CliError::Config("trace.wavelength_m must be positive".into()));
        }
        if !(t.reflection_loss_db >= 0.0 && t.reflection_loss_db.is_finite()) {
            return Err(CliError::Config("trace.reflection_loss_db must be nonnegative".into()));
        }
        self.classifier
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        for (name, empty) in [
            (
                "tx_power_dbm",
                self.sweep.tx_power_dbm.as_ref().is_some_and(Vec::is_empty),
            ),
            ("k_res", self.sweep.k_res.as_ref().is_some_and(Vec::is_empty)),
            ("frames", self.sweep.frames.as_ref().is_some_and(Vec::is_empty)),
        ] {
            if empty {
                return Err(CliError::Config(format!("sweep.{name} is empty")));
            }
        }
        for point in self.sweep_points() {
            point
                .apply(&self.link)
                .validate()
                .map_err(|e| CliError::Config(format!("sweep point {}: {e}", point.index)))?;
            if point.frames == Some(0) {
                return Err(CliError::Config("sweep.frames entries must be positive".into()));
            }
        }
        Ok(())
    }
}
