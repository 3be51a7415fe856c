use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Least-squares fit of an observation onto the selected effective columns.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// `ncols(columns) x N^m`.
    pub coefficients: DMatrix<Complex64>,
    /// `observation - columns * coefficients`.
    pub residual: DMatrix<Complex64>,
    /// The columns were (numerically) rank deficient and the minimum-norm
    /// solution was returned.
    pub rank_deficient: bool,
}

/// Solves `min ||O - A X||` for `X` and returns the fit and residual.
///
/// Uses an SVD so rank-deficient supports still get the minimum-norm
/// solution; singular values below `max(rows, cols) * eps * s_max` count as
/// zero.
pub fn residual_update(observation: &DMatrix<Complex64>, columns: &DMatrix<Complex64>) -> Result<LeastSquares> {
    if columns.nrows() != observation.nrows() {
        return Err(Error::Dimension {
            axis: 0,
            expected: observation.nrows(),
            found: columns.nrows(),
        });
    }
    if columns.ncols() == 0 {
        return Ok(LeastSquares {
            coefficients: DMatrix::zeros(0, observation.ncols()),
            residual: observation.clone(),
            rank_deficient: false,
        });
    }
    let svd = columns.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = columns.nrows().max(columns.ncols()) as f64 * f64::EPSILON * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let coefficients = svd
        .solve(observation, tol)
        .map_err(|e| Error::Decomposition(e.to_string()))?;
    let residual = observation - columns * &coefficients;
    let rank_deficient = rank < columns.ncols();
    if rank_deficient {
        log::warn!(
            "support columns have rank {rank} < {}; using minimum-norm least squares",
            columns.ncols()
        );
    }
    Ok(LeastSquares {
        coefficients,
        residual,
        rank_deficient,
    })
}
