use nalgebra::DMatrix;
use num_complex::Complex64;

use super::array::{partial_steering, ArrayGeometry};
use super::response::time_response;
use crate::error::{Error, Result};
use crate::momp::DictionarySet;

/// Parameter value of every atom, per dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    /// Receive direction cosines along the local x and y axes.
    pub rx_x: Vec<f64>,
    pub rx_y: Vec<f64>,
    /// Transmit direction cosines.
    pub tx_x: Vec<f64>,
    pub tx_y: Vec<f64>,
    /// Delay relative to `tau0`, seconds.
    pub delay: Vec<f64>,
}

/// `floor(k_res * n)` points uniform over `[-1, 1)`.
pub fn angular_grid(n: usize, k_res: f64) -> Vec<f64> {
    let count = atom_count(n, k_res);
    (0..count).map(|j| -1.0 + 2.0 * j as f64 / count as f64).collect()
}

/// `floor(k_res * D)` points uniform over `[0, D T_s)`.
pub fn delay_grid(taps: usize, t_s: f64, k_res: f64) -> Vec<f64> {
    let count = atom_count(taps, k_res);
    let span = taps as f64 * t_s;
    (0..count).map(|j| span * j as f64 / count as f64).collect()
}

fn atom_count(n: usize, k_res: f64) -> usize {
    ((k_res * n as f64).floor() as usize).max(1)
}

fn steering_dictionary(n: usize, grid: &[f64], conjugate: bool) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, grid.len());
    for (j, &g) in grid.iter().enumerate() {
        for (i, v) in partial_steering(n, g).into_iter().enumerate() {
            m[(i, j)] = if conjugate { v.conj() } else { v };
        }
    }
    m
}

/// The five dictionaries of the channel model, in tensor-axis order:
/// receive x and y steering, conjugated transmit x and y steering (the
/// channel carries `a_T^H`), and sinc time responses over the delay grid.
pub fn build_dictionaries(
    k_res: f64,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    taps: usize,
    t_s: f64,
) -> Result<(DictionarySet, Grids)> {
    if !(k_res >= 1.0 && k_res.is_finite()) {
        return Err(Error::Argument(format!("K_res must be at least 1, got {k_res}")));
    }
    let grids = Grids {
        rx_x: angular_grid(rx.nx, k_res),
        rx_y: angular_grid(rx.ny, k_res),
        tx_x: angular_grid(tx.nx, k_res),
        tx_y: angular_grid(tx.ny, k_res),
        delay: delay_grid(taps, t_s, k_res),
    };
    let mut psi5 = DMatrix::zeros(taps, grids.delay.len());
    for (j, &tau) in grids.delay.iter().enumerate() {
        psi5.set_column(j, &nalgebra::DVector::from_vec(time_response(tau, taps, t_s)));
    }
    let dicts = DictionarySet::new(vec![
        steering_dictionary(rx.nx, &grids.rx_x, false),
        steering_dictionary(rx.ny, &grids.rx_y, false),
        steering_dictionary(tx.nx, &grids.tx_x, true),
        steering_dictionary(tx.ny, &grids.tx_y, true),
        psi5,
    ])?;
    Ok((dicts, grids))
}
