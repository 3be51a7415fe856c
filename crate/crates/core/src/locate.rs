//! Single-anchor positioning from estimated paths.
//!
//! Reflections off vertical walls keep the vertical distance travelled and
//! reflections off the floor or ceiling keep the horizontal one. Comparing
//! each reflection with the line-of-sight path under those identities pins
//! down the unknown clock offset `tau0`, after which the LoS direction and
//! delay give the position.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::SPEED_OF_LIGHT;

/// Ranging rows whose `tau0` coefficient is smaller than this are dropped.
pub const DEGENERATE_ROW: f64 = 1e-9;

/// An estimated path in the room frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEstimate {
    /// Direction of arrival at the anchor.
    pub doa: Vector3<f64>,
    /// Direction of departure at the user.
    pub dod: Vector3<f64>,
    /// `tau - tau0`, seconds.
    pub relative_delay: f64,
    /// Coefficient magnitude; only the ordering matters.
    pub gain: f64,
    /// False when the recovered cosines did not describe a unit direction.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathClass {
    LineOfSight,
    WallReflection,
    FloorCeilingReflection,
    Spurious,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierThresholds {
    pub r_az: f64,
    pub r_el: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self { r_az: 0.1, r_el: 0.05 }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.r_az > 0.0 && self.r_az < 2.0) || !(self.r_el > 0.0 && self.r_el < 1.0) {
            return Err(crate::Error::Config(format!(
                "thresholds need 0 < r_az < 2 and 0 < r_el < 1, got r_az = {}, r_el = {}",
                self.r_az, self.r_el
            )));
        }
        Ok(())
    }
}

fn azimuth(v: &Vector3<f64>) -> f64 {
    v.y.atan2(v.x)
}

fn elevation(v: &Vector3<f64>) -> f64 {
    v.z.clamp(-1.0, 1.0).asin()
}

/// Classifies one path from its own arrival and departure angles.
///
/// Walls and LoS mirror the elevation (`theta_el + phi_el = 0`), floor and
/// ceiling keep it (`theta_el = phi_el`); LoS and floor/ceiling paths have
/// opposite azimuths.
pub fn classify_path(p: &PathEstimate, th: &ClassifierThresholds) -> PathClass {
    let (t_el, p_el) = (elevation(&p.doa), elevation(&p.dod));
    let mirrored_el = (t_el + p_el).sin().abs() < th.r_el;
    let kept_el = (t_el - p_el).sin().abs() < th.r_el;
    let opposite_az = (azimuth(&p.doa) - azimuth(&p.dod)).cos() < th.r_az - 1.0;
    match (mirrored_el, kept_el, opposite_az) {
        (true, _, true) => PathClass::LineOfSight,
        (_, true, true) => PathClass::FloorCeilingReflection,
        (true, _, false) => PathClass::WallReflection,
        _ => PathClass::Spurious,
    }
}

/// Clock-offset estimate and how many rows went into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockOffset {
    pub tau0: f64,
    pub rows: usize,
    pub dropped: usize,
}

/// Least-squares `tau0` from reflections paired with the LoS path `los`.
///
/// A wall row says `theta_l^z (d_l + tau0) = theta_1^z (d_1 + tau0)` with `d`
/// the relative delays; floor/ceiling rows use the horizontal norm of the
/// direction instead of its z component. Other classes are ignored. Returns
/// `None` when no row survives.
pub fn estimate_clock_offset(los: &PathEstimate, paths: &[(PathEstimate, PathClass)]) -> Option<ClockOffset> {
    let horiz = |v: &Vector3<f64>| v.x.hypot(v.y);
    let (mut num, mut den) = (0.0, 0.0);
    let (mut rows, mut dropped) = (0, 0);
    for (p, class) in paths {
        let (k1, kl) = match class {
            PathClass::WallReflection | PathClass::LineOfSight => (los.doa.z, p.doa.z),
            PathClass::FloorCeilingReflection => (horiz(&los.doa), horiz(&p.doa)),
            PathClass::Spurious => continue,
        };
        let a = kl - k1;
        let b = k1 * los.relative_delay - kl * p.relative_delay;
        if a.abs() < DEGENERATE_ROW {
            dropped += 1;
            continue;
        }
        num += a * b;
        den += a * a;
        rows += 1;
    }
    (rows > 0).then(|| ClockOffset {
        tau0: num / den,
        rows,
        dropped,
    })
}

/// `u = a + c (d_1 + tau0) theta_1`; `None` if the absolute LoS delay is
/// negative.
pub fn locate_user(anchor: &Vector3<f64>, los: &PathEstimate, tau0: f64) -> Option<Vector3<f64>> {
    let tau1 = los.relative_delay + tau0;
    (tau1 >= 0.0 && tau1.is_finite()).then(|| anchor + los.doa * (SPEED_OF_LIGHT * tau1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoDetection {
    TooFewPaths,
    StrongestNotLos,
    NoRangingRows,
    NegativeRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixStatus {
    Located,
    NoDetection(NoDetection),
}

impl FixStatus {
    pub fn label(&self) -> &'static str {
        match self {
            FixStatus::Located => "located",
            FixStatus::NoDetection(NoDetection::TooFewPaths) => "no_detection:too_few_paths",
            FixStatus::NoDetection(NoDetection::StrongestNotLos) => "no_detection:strongest_not_los",
            FixStatus::NoDetection(NoDetection::NoRangingRows) => "no_detection:no_ranging_rows",
            FixStatus::NoDetection(NoDetection::NegativeRange) => "no_detection:negative_range",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationFix {
    pub position: Option<Vector3<f64>>,
    pub tau0: Option<f64>,
    pub status: FixStatus,
    /// Secondary paths per class; LoS-classified secondaries count as walls.
    pub n_wall: usize,
    pub n_floorceil: usize,
    pub n_spurious: usize,
}

impl LocationFix {
    fn failed(reason: NoDetection) -> Self {
        Self {
            position: None,
            tau0: None,
            status: FixStatus::NoDetection(reason),
            n_wall: 0,
            n_floorceil: 0,
            n_spurious: 0,
        }
    }

    pub fn is_located(&self) -> bool {
        self.status == FixStatus::Located
    }
}

/// Takes the strongest valid path as the LoS candidate, classifies the rest,
/// ranges and projects. Fails closed if the candidate does not look like LoS.
pub fn localize(paths: &[PathEstimate], anchor: &Vector3<f64>, th: &ClassifierThresholds) -> LocationFix {
    let mut valid: Vec<PathEstimate> = paths.iter().filter(|p| p.valid).copied().collect();
    valid.sort_by(|a, b| b.gain.total_cmp(&a.gain));
    if valid.len() < 2 {
        return LocationFix::failed(NoDetection::TooFewPaths);
    }
    let los = valid[0];
    if classify_path(&los, th) != PathClass::LineOfSight {
        return LocationFix::failed(NoDetection::StrongestNotLos);
    }
    let classified: Vec<(PathEstimate, PathClass)> = valid[1..].iter().map(|p| (*p, classify_path(p, th))).collect();
    let count = |f: &dyn Fn(PathClass) -> bool| classified.iter().filter(|(_, c)| f(*c)).count();
    let n_wall = count(&|c| matches!(c, PathClass::WallReflection | PathClass::LineOfSight));
    let n_floorceil = count(&|c| c == PathClass::FloorCeilingReflection);
    let n_spurious = count(&|c| c == PathClass::Spurious);
    let with_counts = |mut f: LocationFix| {
        f.n_wall = n_wall;
        f.n_floorceil = n_floorceil;
        f.n_spurious = n_spurious;
        f
    };
    let Some(clock) = estimate_clock_offset(&los, &classified) else {
        return with_counts(LocationFix::failed(NoDetection::NoRangingRows));
    };
    if clock.dropped > 0 {
        log::debug!("dropped {} degenerate ranging rows", clock.dropped);
    }
    let Some(position) = locate_user(anchor, &los, clock.tau0) else {
        return with_counts(LocationFix::failed(NoDetection::NegativeRange));
    };
    with_counts(LocationFix {
        position: Some(position),
        tau0: Some(clock.tau0),
        status: FixStatus::Located,
        n_wall: 0,
        n_floorceil: 0,
        n_spurious: 0,
    })
}
