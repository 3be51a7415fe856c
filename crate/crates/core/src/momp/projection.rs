use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DictionarySet, InitMode, SolverConfig};
use crate::error::{Error, Result};
use crate::tensor::{contract_full, contract_partial, gram_energy, multi_indices, MultiIndex, Tensor};

/// Cap on the number of atom tuples [`exhaustive_projection`] will visit.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 1 << 24;

/// Denominators below this fraction of the largest one are treated as zero.
const ZERO_DENOMINATOR: f64 = 1e-12;

/// `[O_Phi]_{:, i} = O_res^H Phi[:, i]`, shaped `N^m x N_1^s x ... x N_ND^s`.
pub fn project_observation(residual: &DMatrix<Complex64>, measurement: &Tensor) -> Result<Tensor> {
    let nq = measurement.shape()[0];
    if residual.nrows() != nq {
        return Err(Error::Dimension {
            axis: 0,
            expected: nq,
            found: residual.nrows(),
        });
    }
    let nm = residual.ncols();
    let s = measurement.len() / nq.max(1);
    let mut out = vec![Complex64::new(0.0, 0.0); nm * s];
    for (q, row) in measurement.data().chunks_exact(s).enumerate() {
        for m in 0..nm {
            let w = residual[(q, m)].conj();
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (d, &x) in out[m * s..(m + 1) * s].iter_mut().zip(row) {
                *d += w * x;
            }
        }
    }
    let mut shape = measurement.shape().to_vec();
    shape[0] = nm;
    Tensor::new(shape, out)
}

/// Exact projection ratio for a full atom tuple:
/// `||sum_i O_Phi[:, i] prod_k Psi_k[i_k, j_k]||^2 / ||sum_i Phi[:, i] prod_k Psi_k[i_k, j_k]||^2`.
///
/// Returns `-inf` when the effective column vanishes.
pub fn projection_score(o_phi: &Tensor, measurement: &Tensor, dicts: &DictionarySet, ix: &MultiIndex) -> Result<f64> {
    ix.check(&dicts.atom_counts())?;
    let atoms = dicts.atoms_of(ix);
    let num: f64 = contract_full(o_phi, &atoms, 1)?.iter().map(|z| z.norm_sqr()).sum();
    let den: f64 = contract_full(measurement, &atoms, 1)?
        .iter()
        .map(|z| z.norm_sqr())
        .sum();
    Ok(if den > 0.0 { num / den } else { f64::NEG_INFINITY })
}

/// Gram matrix along dictionary dimension `k` after contracting the dims in
/// `fixed` (dictionary index, atom index) with their atoms.
fn cut_gram(t: &Tensor, dicts: &DictionarySet, k: usize, fixed: &[(usize, usize)]) -> Result<DMatrix<Complex64>> {
    if fixed.is_empty() {
        return Ok(t.gram_along(k + 1));
    }
    let pairs: Vec<(usize, &[Complex64])> = fixed.iter().map(|&(d, j)| (d + 1, dicts.atom(d, j))).collect();
    let reduced = contract_partial(t, &pairs)?;
    let pos = 1 + (0..k).filter(|d| !fixed.iter().any(|f| f.0 == *d)).count();
    Ok(reduced.gram_along(pos))
}

/// Ratio scores for `candidates` of dictionary `k`; `None` marks an atom
/// whose denominator vanished.
fn cut_scores(
    g_num: &DMatrix<Complex64>,
    g_den: Option<&DMatrix<Complex64>>,
    dicts: &DictionarySet,
    k: usize,
    candidates: &[usize],
) -> Vec<Option<f64>> {
    let nums: Vec<f64> = candidates
        .iter()
        .map(|&j| gram_energy(g_num, dicts.atom(k, j)))
        .collect();
    let Some(g_den) = g_den else {
        return nums.into_iter().map(Some).collect();
    };
    let dens: Vec<f64> = candidates
        .iter()
        .map(|&j| gram_energy(g_den, dicts.atom(k, j)))
        .collect();
    let max_den = dens.iter().cloned().fold(0.0, f64::max);
    nums.iter()
        .zip(&dens)
        .map(|(&n, &d)| (d > ZERO_DENOMINATOR * max_den && d > 0.0).then(|| n / d))
        .collect()
}

/// Candidates sorted by descending score; ties keep ascending atom order.
fn rank(candidates: &[usize], scores: &[Option<f64>]) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = candidates
        .iter()
        .zip(scores)
        .filter_map(|(&j, s)| s.map(|s| (j, s)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

fn coarse_candidates(n_atoms: usize, factor: f64) -> Vec<usize> {
    if factor >= 1.0 {
        return (0..n_atoms).collect();
    }
    let n = ((n_atoms as f64 * factor).ceil() as usize).clamp(1, n_atoms);
    let mut v: Vec<usize> = (0..n).map(|m| m * n_atoms / n).collect();
    v.dedup();
    v
}

/// Initialization candidates for dimension `k`, best first.
pub(crate) fn ranked_init(
    k: usize,
    o_phi: &Tensor,
    measurement: &Tensor,
    dicts: &DictionarySet,
    estimated: &[(usize, usize)],
    cfg: &SolverConfig,
) -> Result<Vec<usize>> {
    if k >= dicts.len() {
        return Err(Error::Shape(format!("dimension {k} out of range")));
    }
    if estimated.iter().any(|e| e.0 == k) {
        return Err(Error::Argument(format!("dimension {k} is already estimated")));
    }
    let candidates = coarse_candidates(dicts.get(k).ncols(), cfg.coarse_init_factor);
    let g_num = cut_gram(o_phi, dicts, k, estimated)?;
    let g_den = match cfg.init_mode {
        InitMode::Full => Some(cut_gram(measurement, dicts, k, estimated)?),
        InitMode::NumeratorOnly => None,
    };
    let scores = cut_scores(&g_num, g_den.as_ref(), dicts, k, &candidates);
    let ranked = rank(&candidates, &scores);
    if ranked.is_empty() {
        return Err(Error::Degenerate(format!(
            "every atom of dimension {k} has a vanishing effective column"
        )));
    }
    Ok(ranked.into_iter().map(|(j, _)| j).collect())
}

/// Initial atom for dimension `k` given the already `estimated`
/// `(dimension, atom)` pairs.
///
/// Dimensions without an estimate are kept as free entry indices and their
/// energies summed, which removes any dependence on their unknown atoms.
pub fn init_dimension(
    k: usize,
    o_phi: &Tensor,
    measurement: &Tensor,
    dicts: &DictionarySet,
    estimated: &[(usize, usize)],
    cfg: &SolverConfig,
) -> Result<usize> {
    Ok(ranked_init(k, o_phi, measurement, dicts, estimated, cfg)?[0])
}

fn refine_scored(
    k: usize,
    o_phi: &Tensor,
    measurement: &Tensor,
    dicts: &DictionarySet,
    current: &MultiIndex,
) -> Result<(usize, f64)> {
    current.check(&dicts.atom_counts())?;
    let fixed: Vec<(usize, usize)> = current
        .iter()
        .enumerate()
        .filter(|(d, _)| *d != k)
        .map(|(d, &j)| (d, j))
        .collect();
    let g_num = cut_gram(o_phi, dicts, k, &fixed)?;
    let g_den = cut_gram(measurement, dicts, k, &fixed)?;
    let candidates: Vec<usize> = (0..dicts.get(k).ncols()).collect();
    let scores = cut_scores(&g_num, Some(&g_den), dicts, k, &candidates);
    rank(&candidates, &scores)
        .first()
        .copied()
        .ok_or_else(|| Error::Degenerate(format!("every atom of dimension {k} has a vanishing effective column")))
}

/// Best atom for dimension `k` with every other coordinate frozen at `current`.
pub fn refine_dimension(
    k: usize,
    o_phi: &Tensor,
    measurement: &Tensor,
    dicts: &DictionarySet,
    current: &MultiIndex,
) -> Result<usize> {
    Ok(refine_scored(k, o_phi, measurement, dicts, current)?.0)
}

/// Result of alternating refinement.
#[derive(Debug, Clone)]
pub struct RefineTrace {
    pub index: MultiIndex,
    /// Objective at the starting tuple, then after each completed sweep.
    pub objective: Vec<f64>,
}

/// Runs up to `sweeps` passes of [`refine_dimension`] over every dimension in
/// ascending order, stopping early once a pass changes nothing.
pub fn refine_sweeps(
    o_phi: &Tensor,
    measurement: &Tensor,
    dicts: &DictionarySet,
    start: MultiIndex,
    sweeps: usize,
) -> Result<RefineTrace> {
    let mut objective = vec![projection_score(o_phi, measurement, dicts, &start)?];
    let mut coords = start.into_inner();
    for _ in 0..sweeps {
        let mut changed = false;
        let mut last = *objective.last().unwrap();
        for k in 0..coords.len() {
            let cur = MultiIndex::new(coords.clone());
            let (j, score) = refine_scored(k, o_phi, measurement, dicts, &cur)?;
            if j != coords[k] {
                coords[k] = j;
                changed = true;
            }
            last = score;
        }
        objective.push(last);
        if !changed {
            break;
        }
    }
    Ok(RefineTrace {
        index: MultiIndex::new(coords),
        objective,
    })
}

/// Brute-force global maximizer of the projection ratio over every atom
/// tuple. Ties resolve to the lexicographically smallest tuple.
pub fn exhaustive_projection(
    residual: &DMatrix<Complex64>,
    measurement: &Tensor,
    dicts: &DictionarySet,
    cap: usize,
) -> Result<(MultiIndex, f64)> {
    let counts = dicts.atom_counts();
    let total: u128 = counts.iter().map(|&n| n as u128).product();
    if total > cap as u128 {
        return Err(Error::Resource {
            needed: total,
            cap: cap as u128,
        });
    }
    let o_phi = project_observation(residual, measurement)?;
    let mut best: Option<(MultiIndex, f64)> = None;
    for ix in multi_indices(&counts) {
        let score = projection_score(&o_phi, measurement, dicts, &ix)?;
        if score == f64::NEG_INFINITY {
            continue;
        }
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((ix, score));
        }
    }
    best.ok_or_else(|| Error::Degenerate("every atom tuple has a vanishing effective column".into()))
}
