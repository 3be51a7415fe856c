use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use super::array::ArrayGeometry;
use super::dictionary::Grids;
use crate::error::{Error, Result};
use crate::locate::PathEstimate;
use crate::momp::{DictionarySet, SparseSolution};

/// Unit direction with the given local in-plane cosines, completed on the
/// broadside side, then rotated into the room frame. `None` if the cosines
/// fall outside the unit disk.
pub fn complete_direction(array: &ArrayGeometry, cx: f64, cy: f64) -> Option<Vector3<f64>> {
    let r2 = cx * cx + cy * cy;
    if r2 > 1.0 {
        return None;
    }
    let local = Vector3::new(cx, cy, (1.0 - r2).sqrt());
    Some(array.mount.to_room(&local))
}

/// Maps every support tuple `(j1..j5)` to directions and delay, sorted by
/// descending coefficient magnitude (stable, so ties keep support order).
///
/// Tuples whose cosines leave the unit disk come back with `valid = false`
/// and the in-plane part rescaled onto the unit circle.
pub fn extract_paths(
    solution: &SparseSolution,
    grids: &Grids,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
) -> Result<Vec<PathEstimate>> {
    let mut out = Vec::with_capacity(solution.support.len());
    for (l, ix) in solution.support.iter().enumerate() {
        if ix.len() != 5 {
            return Err(Error::Shape(format!("support entry {ix} does not have 5 coordinates")));
        }
        let coef = solution
            .coefficients
            .row(l)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let (rx_c, tx_c) = (
            (grids.rx_x[ix[0]], grids.rx_y[ix[1]]),
            (grids.tx_x[ix[2]], grids.tx_y[ix[3]]),
        );
        let doa = complete_direction(rx, rx_c.0, rx_c.1);
        let dod = complete_direction(tx, tx_c.0, tx_c.1);
        let valid = doa.is_some() && dod.is_some();
        let clamp = |a: &ArrayGeometry, (x, y): (f64, f64)| {
            let r = (x * x + y * y).sqrt();
            a.mount.to_room(&Vector3::new(x / r, y / r, 0.0))
        };
        out.push(PathEstimate {
            doa: doa.unwrap_or_else(|| clamp(rx, rx_c)),
            dod: dod.unwrap_or_else(|| clamp(tx, tx_c)),
            relative_delay: grids.delay[ix[4]],
            gain: coef,
            valid,
        });
    }
    out.sort_by(|a, b| b.gain.total_cmp(&a.gain));
    Ok(out)
}

/// Channel taps implied by a five-dimensional solution, with the coefficients
/// divided by `sqrt(P_t)`.
pub fn reconstruct_taps(
    solution: &SparseSolution,
    dicts: &DictionarySet,
    tx_power_w: f64,
) -> Result<Vec<DMatrix<Complex64>>> {
    if dicts.len() != 5 {
        return Err(Error::Shape(format!("expected 5 dictionaries, got {}", dicts.len())));
    }
    let sizes = dicts.atom_sizes();
    let (n_r, n_t, taps) = (sizes[0] * sizes[1], sizes[2] * sizes[3], sizes[4]);
    let mut h = vec![DMatrix::zeros(n_r, n_t); taps];
    let scale = 1.0 / tx_power_w.sqrt();
    for (l, ix) in solution.support.iter().enumerate() {
        let c = solution.coefficients[(l, 0)] * scale;
        let atoms = dicts.atoms_of(ix);
        let a_r: Vec<Complex64> = atoms[0]
            .iter()
            .flat_map(|a| atoms[1].iter().map(move |b| a * b))
            .collect();
        // the transmit dictionaries already hold conj(a_T)
        let a_t_h: Vec<Complex64> = atoms[2]
            .iter()
            .flat_map(|a| atoms[3].iter().map(move |b| a * b))
            .collect();
        for (d, hd) in h.iter_mut().enumerate() {
            let w = c * atoms[4][d];
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..n_r {
                for t in 0..n_t {
                    hd[(r, t)] += w * a_r[r] * a_t_h[t];
                }
            }
        }
    }
    Ok(h)
}
