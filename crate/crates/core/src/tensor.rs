//! Dense complex tensors in row-major layout (last index fastest).
//!
//! The layout is load-bearing: the flattened (Kronecker) view of a
//! multidimensional dictionary problem is only equivalent to the tensor form
//! when every multi-index is linearized the same way. [`MultiIndex::linear`]
//! and [`Tensor::offset`] both use it.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::momp::DictionarySet;

/// Default cap on the number of complex entries [`kron_flatten`] may allocate.
pub const DEFAULT_FLATTEN_CAP: usize = 1 << 28;

/// A 0-based coordinate tuple, one entry per dictionary dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(coords: Vec<usize>) -> Self {
        Self(coords)
    }

    /// Checks length and bounds against `extents`.
    pub fn check(&self, extents: &[usize]) -> Result<()> {
        if self.0.len() != extents.len() {
            return Err(Error::Shape(format!(
                "multi-index of length {} used with {} dimensions",
                self.0.len(),
                extents.len()
            )));
        }
        for (axis, (&c, &n)) in self.0.iter().zip(extents).enumerate() {
            if c >= n {
                return Err(Error::Dimension {
                    axis,
                    expected: n,
                    found: c,
                });
            }
        }
        Ok(())
    }

    /// Row-major linear position of this index within `extents`.
    pub fn linear(&self, extents: &[usize]) -> usize {
        self.0.iter().zip(extents).fold(0, |acc, (&c, &n)| acc * n + c)
    }

    pub fn from_linear(mut linear: usize, extents: &[usize]) -> Self {
        let mut coords = vec![0; extents.len()];
        for (c, &n) in coords.iter_mut().zip(extents).rev() {
            *c = linear % n;
            linear /= n;
        }
        Self(coords)
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for MultiIndex {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, c) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Iterates every multi-index of `extents` in row-major order.
pub fn multi_indices(extents: &[usize]) -> impl Iterator<Item = MultiIndex> + '_ {
    let total: usize = extents.iter().product();
    (0..total).map(move |l| MultiIndex::from_linear(l, extents))
}

/// Dense complex tensor. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.is_empty() {
            return Err(Error::Shape("tensor needs at least one dimension".into()));
        }
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "data length {} does not match shape {:?} ({} entries)",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let data = multi_indices(&shape).map(|ix| f(&ix)).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Flat offset of `index`; panics when out of bounds.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        index.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            assert!(i < n, "index {i} out of bounds for extent {n}");
            acc * n + i
        })
    }

    pub fn get(&self, index: &[usize]) -> Complex64 {
        self.data[self.offset(index)]
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Reads the tensor as a matrix with the leading axis as rows and all
    /// trailing axes linearized as columns.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let rows = self.shape[0];
        let cols = self.data.len() / rows.max(1);
        DMatrix::from_row_slice(rows, cols, &self.data)
    }

    fn split(&self, dim: usize) -> (usize, usize, usize) {
        let outer = self.shape[..dim].iter().product();
        let inner = self.shape[dim + 1..].iter().product();
        (outer, self.shape[dim], inner)
    }

    /// Contracts a single dimension against `v`, removing it.
    pub fn contract_dim(&self, dim: usize, v: &[Complex64]) -> Result<Tensor> {
        if dim >= self.ndim() {
            return Err(Error::Shape(format!(
                "dimension {dim} out of range for rank {}",
                self.ndim()
            )));
        }
        if self.ndim() == 1 {
            return Err(Error::Shape(
                "cannot contract the only dimension into a tensor; use contract_full".into(),
            ));
        }
        let (outer, n, inner) = self.split(dim);
        if v.len() != n {
            return Err(Error::Dimension {
                axis: dim,
                expected: n,
                found: v.len(),
            });
        }
        if inner == 1 {
            let data = self
                .data
                .chunks_exact(n)
                .map(|row| row.iter().zip(v).map(|(x, w)| x * w).sum())
                .collect();
            let mut shape = self.shape.clone();
            shape.remove(dim);
            return Ok(Tensor { shape, data });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); outer * inner];
        for o in 0..outer {
            let block = &self.data[o * n * inner..(o + 1) * n * inner];
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (a, &w) in v.iter().enumerate() {
                let row = &block[a * inner..(a + 1) * inner];
                for (d, &x) in dst.iter_mut().zip(row) {
                    *d += x * w;
                }
            }
        }
        let mut shape = self.shape.clone();
        shape.remove(dim);
        Ok(Tensor { shape, data: out })
    }

    /// Hermitian Gram matrix along `dim`:
    /// `G[a, b] = sum over all other indices of t[.., a, ..] * conj(t[.., b, ..])`.
    ///
    /// For any vector `w`, `sum |sum_a t[.., a, ..] w[a]|^2 = w^T G conj(w)`.
    pub fn gram_along(&self, dim: usize) -> DMatrix<Complex64> {
        let (outer, n, inner) = self.split(dim);
        let mut g = DMatrix::<Complex64>::zeros(n, n);
        for o in 0..outer {
            let block = &self.data[o * n * inner..(o + 1) * n * inner];
            for a in 0..n {
                let ra = &block[a * inner..(a + 1) * inner];
                for b in a..n {
                    let rb = &block[b * inner..(b + 1) * inner];
                    let s: Complex64 = ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum();
                    g[(a, b)] += s;
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g[(a, b)] = g[(b, a)].conj();
            }
        }
        g
    }
}

/// Evaluates `w^T G conj(w)` for a Hermitian `G`, i.e. the energy that
/// weighting by `w` along the Gram's dimension would produce.
pub fn gram_energy(g: &DMatrix<Complex64>, w: &[Complex64]) -> f64 {
    let n = w.len();
    let mut acc = 0.0;
    for a in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for b in 0..n {
            row += g[(a, b)] * w[b].conj();
        }
        acc += (w[a] * row).re;
    }
    acc
}

/// Contracts dimensions `start_dim..` of `t`, one vector per dimension, and
/// returns the surviving leading block flattened (row-major).
///
/// `output[q] = sum_i t[q, i] * prod_k vectors[k][i_k]`
pub fn contract_full<V: AsRef<[Complex64]>>(t: &Tensor, vectors: &[V], start_dim: usize) -> Result<Vec<Complex64>> {
    if start_dim > t.ndim() || vectors.len() != t.ndim() - start_dim {
        return Err(Error::Shape(format!(
            "{} vectors supplied to contract dims {}.. of a rank-{} tensor",
            vectors.len(),
            start_dim,
            t.ndim()
        )));
    }
    for (k, v) in vectors.iter().enumerate() {
        let axis = start_dim + k;
        if v.as_ref().len() != t.shape[axis] {
            return Err(Error::Dimension {
                axis,
                expected: t.shape[axis],
                found: v.as_ref().len(),
            });
        }
    }
    // Peel the trailing axis off one at a time; each pass is a row-major
    // matrix-vector product with sequential summation.
    fn peel(src: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        src.chunks_exact(v.len())
            .map(|row| row.iter().zip(v).map(|(x, w)| x * w).sum())
            .collect()
    }
    let mut rev = vectors.iter().rev();
    let Some(last) = rev.next() else {
        return Ok(t.data.clone());
    };
    let mut cur = peel(&t.data, last.as_ref());
    for v in rev {
        cur = peel(&cur, v.as_ref());
    }
    Ok(cur)
}

/// Contracts the listed dimensions and keeps the rest, in their original order.
///
/// `fixed` pairs a dimension with its weight vector. An empty list returns a
/// copy of `t`.
pub fn contract_partial(t: &Tensor, fixed: &[(usize, &[Complex64])]) -> Result<Tensor> {
    let mut dims: Vec<usize> = fixed.iter().map(|(d, _)| *d).collect();
    dims.sort_unstable();
    if dims.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Argument("dimension fixed more than once".into()));
    }
    if dims.len() >= t.ndim() {
        return Err(Error::Shape(
            "contract_partial must leave at least one free dimension; use contract_full".into(),
        ));
    }
    let mut order: Vec<&(usize, &[Complex64])> = fixed.iter().collect();
    order.sort_by_key(|a| std::cmp::Reverse(a.0));
    let Some(((first, v), rest)) = order.split_first().map(|(f, r)| (**f, r)) else {
        return Ok(t.clone());
    };
    let mut cur = t.contract_dim(first, v)?;
    for (dim, v) in rest {
        cur = cur.contract_dim(*dim, v)?;
    }
    Ok(cur)
}

/// Materializes `Psi_1 ⊗ Psi_2 ⊗ ... ⊗ Psi_ND`.
///
/// Row `i` and column `j` are the row-major linearizations of the per-dimension
/// entry and atom indices, so `[out]_{i,j} = prod_k [Psi_k]_{i_k, j_k}`.
pub fn kron_flatten(dicts: &DictionarySet, cap: usize) -> Result<DMatrix<Complex64>> {
    let rows: u128 = dicts.atom_sizes().iter().map(|&n| n as u128).product();
    let cols: u128 = dicts.atom_counts().iter().map(|&n| n as u128).product();
    if rows * cols > cap as u128 {
        return Err(Error::Resource {
            needed: rows * cols,
            cap: cap as u128,
        });
    }
    let mut out = dicts.get(0).clone();
    for k in 1..dicts.len() {
        out = out.kronecker(dicts.get(k));
    }
    Ok(out)
}
