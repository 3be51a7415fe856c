//! Named starting configurations, printed by `momp presets <name>`.

use std::path::PathBuf;

use momp_core::channel::{ArrayGeometry, Mount, TrainingParams};
use momp_core::locate::ClassifierThresholds;
use momp_core::momp::SolverConfig;
use momp_core::pipeline::LinkConfig;
use momp_core::scenario::TraceOptions;
use momp_core::SPEED_OF_LIGHT;

use crate::config::{ExperimentConfig, LineSweep, ScenarioConfig, SweepConfig};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: fn() -> ExperimentConfig,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "full",
        summary: "full-scale setup: 4x4 device, 8x8 access point, M_R = 8, \
                  P_t = 20 dBm, noise -81 dBm, D = 64, N_p = 5, K_res in {16, 128, 1024}; \
                  its dense measurement tensor exceeds the memory cap, so `run` stops with exit 3",
        build: full,
    },
    Preset {
        name: "desk",
        summary: "desk-scale 6x8x3 m room: 2x2 device, 4x4 access point on a wall, 16 taps at 2 ns, \
                  noisy, 12 positions on a line; coarse (meter-level) localization",
        build: desk,
    },
    Preset {
        name: "tiny",
        summary: "noiseless 2x2 / 4x4 link with 8 taps, 20 positions, K_res swept over {2, 4, 8}",
        build: tiny,
    },
    Preset {
        name: "lattice",
        summary: "noiseless ceiling-mounted access point with every visible path on the dictionary grid",
        build: lattice,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

fn desk_scenario() -> ScenarioConfig {
    ScenarioConfig {
        room: [6.0, 8.0, 3.0],
        anchor: [3.0, 0.05, 2.5],
        users: None,
        line: Some(LineSweep {
            start: [1.0, 2.0, 1.0],
            end: [5.0, 7.0, 1.5],
            steps: 12,
        }),
        trace: TraceOptions::default(),
    }
}

pub fn full() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1,
        output_dir: PathBuf::from("results/full"),
        omp_oracle: false,
        scenario: desk_scenario(),
        link: LinkConfig {
            tx: ArrayGeometry {
                nx: 4,
                ny: 4,
                mount: Mount::NegY,
            },
            rx: ArrayGeometry {
                nx: 8,
                ny: 8,
                mount: Mount::PosY,
            },
            ..LinkConfig::full_scale()
        },
        classifier: ClassifierThresholds::default(),
        sweep: SweepConfig {
            k_res: Some(vec![16.0, 128.0, 1024.0]),
            ..SweepConfig::default()
        },
    }
}

pub fn desk() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1,
        output_dir: PathBuf::from("results/desk"),
        omp_oracle: false,
        scenario: desk_scenario(),
        link: LinkConfig::desk(),
        classifier: ClassifierThresholds { r_az: 0.5, r_el: 0.25 },
        sweep: SweepConfig::default(),
    }
}

pub fn tiny() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1,
        output_dir: PathBuf::from("results/tiny"),
        omp_oracle: false,
        scenario: ScenarioConfig {
            line: Some(LineSweep {
                start: [1.0, 2.0, 1.0],
                end: [5.0, 7.0, 1.5],
                steps: 20,
            }),
            ..desk_scenario()
        },
        link: LinkConfig::tiny(),
        classifier: ClassifierThresholds { r_az: 0.5, r_el: 0.25 },
        sweep: SweepConfig {
            k_res: Some(vec![2.0, 4.0, 8.0]),
            ..SweepConfig::default()
        },
    }
}

/// Lattice of `UNIT` meters: the anchor and user are 6 units apart
/// vertically and the LoS and wall images sit 7, 9, 9, 11 and 11 units
/// away, so every visible cosine is a multiple of `1/693` and every relative
/// delay a multiple of `UNIT / c`.
pub fn lattice() -> ExperimentConfig {
    const UNIT: f64 = 0.5;
    ExperimentConfig {
        seed: 1,
        output_dir: PathBuf::from("results/lattice"),
        omp_oracle: false,
        scenario: ScenarioConfig {
            room: [6.0 * UNIT, 9.0 * UNIT, 8.0 * UNIT],
            anchor: [2.0 * UNIT, 3.0 * UNIT, 7.0 * UNIT],
            users: Some(vec![[4.0 * UNIT, 6.0 * UNIT, 1.0 * UNIT]]),
            line: None,
            trace: TraceOptions::default(),
        },
        link: LinkConfig {
            tx: ArrayGeometry {
                nx: 4,
                ny: 4,
                mount: Mount::PosZ,
            },
            rx: ArrayGeometry {
                nx: 4,
                ny: 4,
                mount: Mount::NegZ,
            },
            training: TrainingParams {
                m_r: 4,
                m_t: 1,
                pilot_ones: 4,
                pilot_tail: 2,
                taps: 2,
                // 1386 atoms per 4-element axis; 693 delay atoms, one per UNIT / c
                sampling_time_s: 346.5 * UNIT / SPEED_OF_LIGHT,
                tx_power_dbm: 20.0,
                noise_dbm: None,
                frames: None,
            },
            k_res: 346.5,
            solver: SolverConfig::with_sparsity(5),
            delay_guard_taps: 0.0,
        },
        classifier: ClassifierThresholds::default(),
        sweep: SweepConfig::default(),
    }
}
