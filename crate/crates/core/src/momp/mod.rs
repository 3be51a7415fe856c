//! Multidimensional orthogonal matching pursuit.
//!
//! The sparse signal lives on the product of `N_D` small dictionaries. The
//! solver never builds their Kronecker product: each support iteration
//! projects the residual through the measurement tensor once, picks an atom
//! per dimension with a relaxed score, then refines one dimension at a time
//! with the others frozen.

mod omp;
mod projection;
mod residual;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{contract_full, MultiIndex, Tensor};

pub use omp::{flatten_measurement, omp_solve};
pub use projection::{
    exhaustive_projection, init_dimension, project_observation, projection_score, refine_dimension, refine_sweeps,
    RefineTrace, DEFAULT_EXHAUSTIVE_CAP,
};
pub use residual::{residual_update, LeastSquares};

/// The per-dimension dictionaries `Psi_k`, each `N_k^s x N_k^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionarySet {
    dicts: Vec<DMatrix<Complex64>>,
}

impl DictionarySet {
    pub fn new(dicts: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if dicts.is_empty() {
            return Err(Error::Argument("at least one dictionary is required".into()));
        }
        for (k, d) in dicts.iter().enumerate() {
            if d.nrows() == 0 || d.ncols() == 0 {
                return Err(Error::Argument(format!("dictionary {k} is empty")));
            }
            if let Some(j) = (0..d.ncols()).find(|&j| d.column(j).norm_squared() == 0.0) {
                return Err(Error::Argument(format!(
                    "dictionary {k} has a zero-norm atom at column {j}"
                )));
            }
        }
        Ok(Self { dicts })
    }

    /// Number of dictionaries, `N_D`.
    pub fn len(&self) -> usize {
        self.dicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dicts.is_empty()
    }

    pub fn get(&self, k: usize) -> &DMatrix<Complex64> {
        &self.dicts[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DMatrix<Complex64>> {
        self.dicts.iter()
    }

    /// Column `j` of dictionary `k` as a contiguous slice.
    pub fn atom(&self, k: usize, j: usize) -> &[Complex64] {
        let d = &self.dicts[k];
        let n = d.nrows();
        &d.as_slice()[j * n..(j + 1) * n]
    }

    /// Atom sizes `N_k^s`.
    pub fn atom_sizes(&self) -> Vec<usize> {
        self.dicts.iter().map(|d| d.nrows()).collect()
    }

    /// Atom counts `N_k^a`.
    pub fn atom_counts(&self) -> Vec<usize> {
        self.dicts.iter().map(|d| d.ncols()).collect()
    }

    pub fn atoms_of<'a>(&'a self, ix: &MultiIndex) -> Vec<&'a [Complex64]> {
        ix.iter().enumerate().map(|(k, &j)| self.atom(k, j)).collect()
    }
}

/// Observation `O` (`N^q x N^m`), measurement tensor `Phi`
/// (`N^q x N_1^s x ... x N_ND^s`) and dictionaries.
#[derive(Debug, Clone)]
pub struct SparseProblem {
    pub observation: DMatrix<Complex64>,
    pub measurement: Tensor,
    pub dicts: DictionarySet,
}

impl SparseProblem {
    pub fn new(observation: DMatrix<Complex64>, measurement: Tensor, dicts: DictionarySet) -> Result<Self> {
        if measurement.ndim() != dicts.len() + 1 {
            return Err(Error::Shape(format!(
                "measurement rank {} does not match {} dictionaries",
                measurement.ndim(),
                dicts.len()
            )));
        }
        if measurement.shape()[0] != observation.nrows() {
            return Err(Error::Dimension {
                axis: 0,
                expected: observation.nrows(),
                found: measurement.shape()[0],
            });
        }
        for (k, &n) in dicts.atom_sizes().iter().enumerate() {
            if measurement.shape()[k + 1] != n {
                return Err(Error::Dimension {
                    axis: k + 1,
                    expected: n,
                    found: measurement.shape()[k + 1],
                });
            }
        }
        Ok(Self {
            observation,
            measurement,
            dicts,
        })
    }

    /// The effective column `sum_i Phi[:, i] prod_k Psi_k[i_k, j_k]`.
    pub fn effective_column(&self, ix: &MultiIndex) -> Result<Vec<Complex64>> {
        ix.check(&self.dicts.atom_counts())?;
        contract_full(&self.measurement, &self.dicts.atoms_of(ix), 1)
    }
}

/// How the initialization score treats its denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Full,
    /// Treat the denominator as 1 and rank by numerator energy alone.
    NumeratorOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Maximum support size `N_p`.
    pub sparsity: usize,
    /// Full refinement sweeps per support iteration, `N_iter`.
    pub refine_iters: usize,
    pub init_mode: InitMode,
    /// Fraction of atoms (uniformly subsampled) searched during
    /// initialization; refinement always uses every atom.
    pub coarse_init_factor: f64,
    /// Stop when the relative residual decrease of an iteration falls below this.
    pub stop_tol: f64,
    /// Dimension order for initialization; `None` is ascending.
    pub init_order: Option<Vec<usize>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sparsity: 1,
            refine_iters: 3,
            init_mode: InitMode::Full,
            coarse_init_factor: 1.0,
            stop_tol: 0.0,
            init_order: None,
        }
    }
}

impl SolverConfig {
    pub fn with_sparsity(sparsity: usize) -> Self {
        Self {
            sparsity,
            ..Self::default()
        }
    }

    pub fn validate(&self, n_dims: usize) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::Config("sparsity must be at least 1".into()));
        }
        if !(self.coarse_init_factor > 0.0 && self.coarse_init_factor <= 1.0) {
            return Err(Error::Config(format!(
                "coarse_init_factor {} outside (0, 1]",
                self.coarse_init_factor
            )));
        }
        if self.stop_tol.is_nan() || self.stop_tol < 0.0 {
            return Err(Error::Config("stop_tol must be nonnegative".into()));
        }
        if let Some(order) = &self.init_order {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..n_dims).collect::<Vec<_>>() {
                return Err(Error::Config(format!(
                    "init_order {order:?} is not a permutation of 0..{n_dims}"
                )));
            }
        }
        Ok(())
    }

    fn order(&self, n_dims: usize) -> Vec<usize> {
        self.init_order.clone().unwrap_or_else(|| (0..n_dims).collect())
    }
}

/// Support tuples and their least-squares coefficient rows.
#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub support: Vec<MultiIndex>,
    /// `|support| x N^m`, row `l` belongs to `support[l]`.
    pub coefficients: DMatrix<Complex64>,
    /// `||O||` followed by the residual norm after each accepted atom.
    pub residual_norm_history: Vec<f64>,
    pub residual: DMatrix<Complex64>,
    /// Set when a least-squares step fell back to the minimum-norm solution.
    pub rank_deficient: bool,
}

impl SparseSolution {
    fn empty(observation: &DMatrix<Complex64>) -> Self {
        Self {
            support: Vec::new(),
            coefficients: DMatrix::zeros(0, observation.ncols()),
            residual_norm_history: vec![observation.norm()],
            residual: observation.clone(),
            rank_deficient: false,
        }
    }

    pub fn residual_norm(&self) -> f64 {
        *self.residual_norm_history.last().unwrap_or(&0.0)
    }
}

/// Outcome of one greedy step shared by OMP and MOMP: fit the enlarged
/// support and decide whether to keep it.
pub(crate) fn accept_step(
    sol: &mut SparseSolution,
    observation: &DMatrix<Complex64>,
    columns: &mut DMatrix<Complex64>,
    column: &[Complex64],
    index: MultiIndex,
    stop_tol: f64,
) -> Result<bool> {
    let n = columns.ncols();
    let mut candidate = columns.clone().insert_column(n, Complex64::new(0.0, 0.0));
    candidate.column_mut(n).copy_from_slice(column);
    let fit = residual_update(observation, &candidate)?;
    let prev = sol.residual_norm();
    let next = fit.residual.norm();
    let decrease = if prev > 0.0 { (prev - next) / prev } else { 0.0 };
    if decrease < stop_tol {
        return Ok(false);
    }
    *columns = candidate;
    sol.support.push(index);
    sol.coefficients = fit.coefficients;
    sol.residual = fit.residual;
    sol.residual_norm_history.push(next);
    sol.rank_deficient |= fit.rank_deficient;
    Ok(true)
}

/// Runs MOMP for up to `cfg.sparsity` support iterations.
pub fn momp_solve(problem: &SparseProblem, cfg: &SolverConfig) -> Result<SparseSolution> {
    let dicts = &problem.dicts;
    let nd = dicts.len();
    cfg.validate(nd)?;
    let order = cfg.order(nd);
    let phi = &problem.measurement;
    let obs = &problem.observation;

    let mut sol = SparseSolution::empty(obs);
    let mut columns = DMatrix::<Complex64>::zeros(obs.nrows(), 0);

    for _ in 0..cfg.sparsity {
        if sol.residual_norm() == 0.0 {
            break;
        }
        let o_phi = project_observation(&sol.residual, phi)?;
        let first = order[0];
        let ranked = projection::ranked_init(first, &o_phi, phi, dicts, &[], cfg)?;

        let mut chosen = None;
        for &start in &ranked {
            let mut estimated = vec![(first, start)];
            for &k in &order[1..] {
                let j = init_dimension(k, &o_phi, phi, dicts, &estimated, cfg)?;
                estimated.push((k, j));
            }
            estimated.sort_unstable();
            let init = MultiIndex::new(estimated.into_iter().map(|(_, j)| j).collect());
            let trace = refine_sweeps(&o_phi, phi, dicts, init, cfg.refine_iters)?;
            if !sol.support.contains(&trace.index) {
                chosen = Some(trace.index);
                break;
            }
            log::debug!("duplicate support tuple {}; retrying initialization", trace.index);
        }
        let Some(index) = chosen else {
            log::debug!("no new atom tuple found; stopping at {} atoms", sol.support.len());
            break;
        };
        let column = problem.effective_column(&index)?;
        if !accept_step(&mut sol, obs, &mut columns, &column, index, cfg.stop_tol)? {
            break;
        }
    }
    Ok(sol)
}
