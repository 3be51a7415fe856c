use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{accept_step, SolverConfig, SparseSolution};
use crate::error::{Error, Result};
use crate::tensor::{MultiIndex, Tensor, DEFAULT_FLATTEN_CAP};

/// Reads a measurement tensor as the `N^q x prod_k N_k^s` matrix whose
/// columns follow the row-major multi-index order.
pub fn flatten_measurement(measurement: &Tensor) -> DMatrix<Complex64> {
    measurement.to_matrix()
}

/// Classical OMP on the flattened problem `O ~ Phi_bar Psi_bar C`.
///
/// Each iteration picks the column of `Phi_bar Psi_bar` with the largest
/// normalized correlation `||r^H g_j||^2 / ||g_j||^2` (lowest index on ties,
/// already selected columns excluded) and refits by least squares. The
/// support is reported as single-coordinate multi-indices holding the flat
/// column index.
pub fn omp_solve(
    observation: &DMatrix<Complex64>,
    flat_measurement: &DMatrix<Complex64>,
    flat_dictionary: &DMatrix<Complex64>,
    cfg: &SolverConfig,
) -> Result<SparseSolution> {
    cfg.validate(1)?;
    if flat_measurement.nrows() != observation.nrows() {
        return Err(Error::Dimension {
            axis: 0,
            expected: observation.nrows(),
            found: flat_measurement.nrows(),
        });
    }
    if flat_measurement.ncols() != flat_dictionary.nrows() {
        return Err(Error::Dimension {
            axis: 1,
            expected: flat_measurement.ncols(),
            found: flat_dictionary.nrows(),
        });
    }
    let needed = flat_measurement.nrows() as u128 * flat_dictionary.ncols() as u128;
    if needed > DEFAULT_FLATTEN_CAP as u128 {
        return Err(Error::Resource {
            needed,
            cap: DEFAULT_FLATTEN_CAP as u128,
        });
    }

    let effective = flat_measurement * flat_dictionary;
    let norms: Vec<f64> = effective.column_iter().map(|c| c.norm_squared()).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);

    let mut sol = SparseSolution::empty(observation);
    let mut columns = DMatrix::<Complex64>::zeros(observation.nrows(), 0);
    let mut selected = vec![false; effective.ncols()];

    for _ in 0..cfg.sparsity {
        if sol.residual_norm() == 0.0 {
            break;
        }
        let corr = sol.residual.adjoint() * &effective;
        let mut best: Option<(usize, f64)> = None;
        for (j, &n) in norms.iter().enumerate() {
            if selected[j] || n <= 1e-12 * max_norm || n == 0.0 {
                continue;
            }
            let num: f64 = corr.column(j).iter().map(|z| z.norm_sqr()).sum();
            let score = num / n;
            if best.is_none_or(|b| score > b.1) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        let column: Vec<Complex64> = effective.column(j).iter().copied().collect();
        if !accept_step(
            &mut sol,
            observation,
            &mut columns,
            &column,
            MultiIndex::new(vec![j]),
            cfg.stop_tol,
        )? {
            break;
        }
        selected[j] = true;
    }
    Ok(sol)
}
