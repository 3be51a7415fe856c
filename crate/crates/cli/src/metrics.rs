//! Per-position error metrics and percentile summaries.

use momp_core::Complex64;
use nalgebra::{DMatrix, Vector3};

use crate::{CliError, Result};

/// Reported in place of `-inf` when the estimate is exact.
pub const NMSE_FLOOR_DB: f64 = -300.0;

/// Percentiles written to the summary table.
pub const SUMMARY_PERCENTILES: [f64; 5] = [10.0, 25.0, 50.0, 75.0, 90.0];

/// Angle between two unit directions, `acos(<a, b>)` with the inner product
/// clamped to `[-1, 1]`.
pub fn angular_error(truth: &Vector3<f64>, estimate: &Vector3<f64>) -> f64 {
    truth.dot(estimate).clamp(-1.0, 1.0).acos()
}

/// `10 log10(sum_d ||H^_d - H_d||^2 / sum_d ||H_d||^2)`, floored at
/// [`NMSE_FLOOR_DB`].
pub fn nmse_db(truth: &[DMatrix<Complex64>], estimate: &[DMatrix<Complex64>]) -> Result<f64> {
    if truth.len() != estimate.len() || truth.iter().zip(estimate).any(|(a, b)| a.shape() != b.shape()) {
        return Err(CliError::Runtime("NMSE of differently shaped channels".into()));
    }
    let energy: f64 = truth.iter().map(|h| h.norm_squared()).sum();
    if energy == 0.0 {
        return Err(CliError::Runtime("NMSE undefined for a zero channel".into()));
    }
    let err: f64 = truth.iter().zip(estimate).map(|(a, b)| (b - a).norm_squared()).sum();
    if err == 0.0 {
        return Ok(NMSE_FLOOR_DB);
    }
    Ok((10.0 * (err / energy).log10()).max(NMSE_FLOOR_DB))
}

/// Delay error of the second true path.
///
/// `relative` holds the estimated delays `tau^_l - tau0` with the main path
/// first; the unknown offset is fixed by assuming the main path's true delay
/// `tau1` is known. Returns the smallest `|tau2 - tau^_l|`, or `None` with no
/// estimates.
pub fn secondary_delay_error(tau2: f64, relative: &[f64], tau1: f64) -> Option<f64> {
    let tau0 = tau1 - relative.first()?;
    relative
        .iter()
        .map(|d| (tau2 - (d + tau0)).abs())
        .min_by(f64::total_cmp)
}

/// Percentile `p` in `[0, 100]` by linear interpolation between closest
/// ranks: the sorted sample at fractional rank `p / 100 * (n - 1)`.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}
