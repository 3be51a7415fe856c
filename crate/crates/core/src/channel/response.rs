use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use super::array::{check_unit, steering, ArrayGeometry};
use crate::error::{Error, Result};

/// One propagation path: complex gain, direction of arrival at the receiver,
/// direction of departure at the transmitter (both room frame, pointing away
/// from the device) and absolute delay in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    pub doa: Vector3<f64>,
    pub dod: Vector3<f64>,
    pub delay: f64,
}

impl PathParams {
    pub fn new(gain: Complex64, doa: Vector3<f64>, dod: Vector3<f64>, delay: f64) -> Result<Self> {
        check_unit(&doa, 1e-12)?;
        check_unit(&dod, 1e-12)?;
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::Domain(format!(
                "path delay {delay} must be finite and nonnegative"
            )));
        }
        Ok(Self { gain, doa, dod, delay })
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Sinc pulse sampled at the tap instants: `[a_D]_d = sinc(d - delta_tau / T_s)`
/// for `d = 0..D-1`, where `delta_tau = tau - tau0`.
pub fn time_response(delta_tau: f64, taps: usize, t_s: f64) -> Vec<Complex64> {
    let shift = delta_tau / t_s;
    (0..taps)
        .map(|d| {
            // exact zeros at the other integer samples
            let x = d as f64 - shift;
            let v = if x.fract() == 0.0 && x != 0.0 { 0.0 } else { sinc(x) };
            Complex64::new(v, 0.0)
        })
        .collect()
}

/// Delay taps `H_d = sum_l alpha_l a_R(theta_l) a_T(phi_l)^H [a_D(tau_l - tau0)]_d`,
/// each `rx.len() x tx.len()`.
pub fn channel_taps(
    paths: &[PathParams],
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    taps: usize,
    t_s: f64,
    tau0: f64,
) -> Result<Vec<DMatrix<Complex64>>> {
    let mut h = vec![DMatrix::zeros(rx.len(), tx.len()); taps];
    let window = taps as f64 * t_s;
    for (l, p) in paths.iter().enumerate() {
        let rel = p.delay - tau0;
        if rel < 0.0 || rel >= window {
            log::warn!("path {l} delay {rel:.3e} s lies outside the {window:.3e} s tap window");
        }
        let a_r = steering(rx, &p.doa)?;
        let a_t = steering(tx, &p.dod)?;
        let outer = DMatrix::from_fn(rx.len(), tx.len(), |r, c| p.gain * a_r[r] * a_t[c].conj());
        for (hd, w) in h.iter_mut().zip(time_response(rel, taps, t_s)) {
            if w.re != 0.0 {
                *hd += &outer * w;
            }
        }
    }
    Ok(h)
}
