//! Scenario to position: synthesize a link, estimate its paths with MOMP and
//! localize the user. The measurement tensor depends only on the training,
//! so a [`Link`] builds it once and reuses it for every channel.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_dictionaries, build_training_dft, channel_taps, extract_paths, reconstruct_taps, synthesize_measurements,
    ArrayGeometry, Grids, MeasurementOperator, Mount, PathParams, TrainingParams, TrainingSet,
};
use crate::error::{Error, Result};
use crate::locate::PathEstimate;
use crate::momp::{momp_solve, DictionarySet, SolverConfig, SparseProblem, SparseSolution};
use crate::tensor::{Tensor, DEFAULT_FLATTEN_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    /// User device array.
    pub tx: ArrayGeometry,
    /// Access point array.
    pub rx: ArrayGeometry,
    pub training: TrainingParams,
    pub k_res: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    /// The receiver's timing reference sits this many taps before the
    /// earliest arrival.
    #[serde(default = "default_guard")]
    pub delay_guard_taps: f64,
}

fn default_guard() -> f64 {
    1.0
}

impl LinkConfig {
    /// Full-scale setup at `K_res = 16`. Its dense measurement
    /// tensor does not fit in memory; see [`MeasurementOperator`].
    pub fn full_scale() -> Self {
        let (tx, rx) = crate::channel::full_scale_arrays();
        Self {
            tx,
            rx,
            training: crate::channel::full_scale_training(),
            k_res: 16.0,
            solver: SolverConfig::with_sparsity(5),
            delay_guard_taps: 1.0,
        }
    }

    /// Desk-scale setup: 2x2 device facing -y, 4x4 access point on the
    /// `y = 0` wall facing +y, 16 taps at 2 ns, `K_res = 4`.
    pub fn desk() -> Self {
        Self {
            tx: ArrayGeometry {
                nx: 2,
                ny: 2,
                mount: Mount::NegY,
            },
            rx: ArrayGeometry {
                nx: 4,
                ny: 4,
                mount: Mount::PosY,
            },
            training: TrainingParams {
                m_r: 4,
                m_t: 1,
                pilot_ones: 16,
                pilot_tail: 8,
                taps: 16,
                sampling_time_s: 2e-9,
                tx_power_dbm: 20.0,
                noise_dbm: Some(-81.0),
                frames: None,
            },
            k_res: 4.0,
            solver: SolverConfig::with_sparsity(5),
            delay_guard_taps: 1.0,
        }
    }

    /// Noiseless 2x2 device facing -y, 4x4 access point facing +y, 8 taps
    /// at 4 ns, `K_res = 2`, three paths. Small enough to solve in
    /// milliseconds.
    pub fn tiny() -> Self {
        Self {
            tx: ArrayGeometry {
                nx: 2,
                ny: 2,
                mount: Mount::NegY,
            },
            rx: ArrayGeometry {
                nx: 4,
                ny: 4,
                mount: Mount::PosY,
            },
            training: TrainingParams {
                m_r: 4,
                m_t: 1,
                pilot_ones: 8,
                pilot_tail: 4,
                taps: 8,
                sampling_time_s: 4e-9,
                tx_power_dbm: 20.0,
                noise_dbm: None,
                frames: None,
            },
            k_res: 2.0,
            solver: SolverConfig::with_sparsity(3),
            delay_guard_taps: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        self.solver.validate(5)?;
        if !(self.k_res >= 1.0 && self.k_res.is_finite()) {
            return Err(Error::Config(format!("K_res must be at least 1, got {}", self.k_res)));
        }
        if !(self.delay_guard_taps >= 0.0 && self.delay_guard_taps.is_finite()) {
            return Err(Error::Config("delay guard must be nonnegative".into()));
        }
        for (name, a) in [("tx", self.tx), ("rx", self.rx)] {
            if a.nx == 0 || a.ny == 0 {
                return Err(Error::Config(format!("{name} array must be at least 1x1")));
            }
        }
        for (name, a, chains) in [("tx", self.tx, self.training.m_t), ("rx", self.rx, self.training.m_r)] {
            if chains == 0 || a.len() % chains != 0 {
                return Err(Error::Config(format!(
                    "{chains} RF chains do not divide the {} {name} antennas",
                    a.len()
                )));
            }
        }
        Ok(())
    }
}

/// Everything about a link that does not depend on the channel.
#[derive(Debug, Clone)]
pub struct Link {
    pub cfg: LinkConfig,
    pub training: TrainingSet,
    pub operator: MeasurementOperator,
    pub measurement: Tensor,
    pub dicts: DictionarySet,
    pub grids: Grids,
}

/// One channel pushed through a [`Link`].
#[derive(Debug, Clone)]
pub struct LinkEstimate {
    /// Paths the arrays can see, as synthesized.
    pub paths: Vec<PathParams>,
    pub tau0: f64,
    pub taps: Vec<DMatrix<Complex64>>,
    pub solution: SparseSolution,
    pub estimates: Vec<PathEstimate>,
    pub estimated_taps: Vec<DMatrix<Complex64>>,
}

impl Link {
    pub fn new(cfg: LinkConfig) -> Result<Self> {
        Self::with_cap(cfg, DEFAULT_FLATTEN_CAP)
    }

    /// Like [`Link::new`] with an explicit cap on dense tensor entries.
    pub fn with_cap(cfg: LinkConfig, cap: usize) -> Result<Self> {
        cfg.validate()?;
        let training = build_training_dft(&cfg.tx, &cfg.rx, &cfg.training)?;
        let operator = MeasurementOperator::new(&training)?;
        let measurement = operator.to_tensor(cap)?;
        let (dicts, grids) = build_dictionaries(
            cfg.k_res,
            &cfg.tx,
            &cfg.rx,
            cfg.training.taps,
            cfg.training.sampling_time_s,
        )?;
        Ok(Self {
            cfg,
            training,
            operator,
            measurement,
            dicts,
            grids,
        })
    }

    /// Drops paths arriving behind the access point or leaving behind the
    /// device; a planar array cannot tell them from their mirror images.
    pub fn visible(&self, paths: &[PathParams]) -> Vec<PathParams> {
        paths
            .iter()
            .filter(|p| self.cfg.rx.sees(&p.doa) && self.cfg.tx.sees(&p.dod))
            .copied()
            .collect()
    }

    /// Receiver timing reference for a set of paths.
    pub fn clock_reference(&self, paths: &[PathParams]) -> f64 {
        let first = paths.iter().map(|p| p.delay).fold(f64::INFINITY, f64::min);
        first - self.cfg.delay_guard_taps * self.cfg.training.sampling_time_s
    }

    /// Synthesizes and whitens the training observation of `paths`, which
    /// should already be filtered with [`Link::visible`].
    pub fn observe(
        &self,
        paths: &[PathParams],
        tau0: f64,
        noise_seed: u64,
    ) -> Result<(DMatrix<Complex64>, Vec<DMatrix<Complex64>>)> {
        let t = &self.cfg.training;
        let taps = channel_taps(paths, &self.cfg.tx, &self.cfg.rx, t.taps, t.sampling_time_s, tau0)?;
        let received = synthesize_measurements(&taps, &self.training, noise_seed)?;
        Ok((self.operator.observation(&received)?, taps))
    }

    pub fn solve(&self, observation: DMatrix<Complex64>) -> Result<SparseSolution> {
        let problem = SparseProblem::new(observation, self.measurement.clone(), self.dicts.clone())?;
        momp_solve(&problem, &self.cfg.solver)
    }

    /// Full chain for one channel. Paths the arrays cannot see are dropped
    /// first; at least one must remain.
    pub fn estimate(&self, paths: &[PathParams], noise_seed: u64) -> Result<LinkEstimate> {
        let paths = self.visible(paths);
        if paths.is_empty() {
            return Err(Error::Domain("no path is visible to both arrays".into()));
        }
        let tau0 = self.clock_reference(&paths);
        let (observation, taps) = self.observe(&paths, tau0, noise_seed)?;
        let problem = SparseProblem::new(observation, self.measurement.clone(), self.dicts.clone())?;
        let solution = momp_solve(&problem, &self.cfg.solver)?;
        let estimates = extract_paths(&solution, &self.grids, &self.cfg.tx, &self.cfg.rx)?;
        let estimated_taps = reconstruct_taps(&solution, &self.dicts, self.training.tx_power_w)?;
        Ok(LinkEstimate {
            paths,
            tau0,
            taps,
            solution,
            estimates,
            estimated_taps,
        })
    }
}

/// Anchor-relative helper for callers that only have positions.
pub fn direction(from: &Vector3<f64>, to: &Vector3<f64>) -> Vector3<f64> {
    (to - from).normalize()
}
