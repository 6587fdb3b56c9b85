//! Compressed sparse row complex matrices and the dense kernels used by the
//! master-equation right-hand side.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::fmt17;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Below this dimension dense kernels run on the calling thread.
const PAR_MIN_DIM: usize = 96;

/// Square complex sparse matrix in CSR layout, columns sorted within rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    /// Builds from unordered triplets; duplicates are summed and exact zeros
    /// dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({}, {}) outside dimension {}", r, c, dim);
            *acc.entry((r, c)).or_insert(ZERO) += v;
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(acc.len());
        let mut values = Vec::with_capacity(acc.len());
        for ((r, c), v) in acc {
            if v == ZERO {
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { dim, row_ptr, col_idx, values }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseOperator { dim, row_ptr: vec![0; dim + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut t = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if m[(r, c)] != ZERO {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// Row-major triplets.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    /// `Σ coeff · op` over operators of equal dimension.
    pub fn linear_combination(terms: &[(C64, &SparseOperator)]) -> Result<Self> {
        let dim = terms.first().map_or(0, |(_, op)| op.dim);
        let mut t = Vec::new();
        for (s, op) in terms {
            if op.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: op.dim });
            }
            if *s == ZERO {
                continue;
            }
            t.extend(op.triplets().map(|(r, c, v)| (r, c, v * s)));
        }
        Ok(Self::from_triplets(dim, t))
    }

    pub fn matmul(&self, other: &SparseOperator) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut t = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Ok(Self::from_triplets(self.dim, t))
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &SparseOperator) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        Self::linear_combination(&[(C64::new(1.0, 0.0), &ab), (C64::new(-1.0, 0.0), &ba)])
    }

    /// `a ⊗ b` with row index `i_a · dim_b + i_b`.
    pub fn kron(a: &SparseOperator, b: &SparseOperator) -> Self {
        let db = b.dim;
        let mut t = Vec::with_capacity(a.nnz() * b.nnz());
        for (ra, ca, va) in a.triplets() {
            for (rb, cb, vb) in b.triplets() {
                t.push((ra * db + rb, ca * db + cb, va * vb));
            }
        }
        Self::from_triplets(a.dim * db, t)
    }

    /// Largest entry modulus; zero for the empty operator.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A − A†|`
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r).conj()).norm());
        }
        worst
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.dim).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `tr(A X)`
    pub fn trace_product(&self, x: &DMatrix<C64>) -> C64 {
        let mut acc = ZERO;
        for (r, c, v) in self.triplets() {
            acc += v * x[(c, r)];
        }
        acc
    }

    /// `out += alpha · A · x`
    pub fn left_mul_acc(&self, x: &DMatrix<C64>, alpha: C64, out: &mut DMatrix<C64>) {
        let n = self.dim;
        assert_eq!(x.nrows(), n);
        assert_eq!(out.shape(), x.shape());
        let xs = x.as_slice();
        let kernel = |(c, oc): (usize, &mut [C64])| {
            let xc = &xs[c * n..(c + 1) * n];
            for (r, o) in oc.iter_mut().enumerate() {
                let mut s = ZERO;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    s += self.values[k] * xc[self.col_idx[k]];
                }
                *o += alpha * s;
            }
        };
        if n >= PAR_MIN_DIM {
            out.as_mut_slice().par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            out.as_mut_slice().chunks_mut(n).enumerate().for_each(kernel);
        }
    }

    /// `out += alpha · x · A†`
    pub fn right_mul_adjoint_acc(&self, x: &DMatrix<C64>, alpha: C64, out: &mut DMatrix<C64>) {
        let n = self.dim;
        assert_eq!(x.ncols(), n);
        assert_eq!(out.shape(), x.shape());
        let rows = x.nrows();
        let xs = x.as_slice();
        let kernel = |(c, oc): (usize, &mut [C64])| {
            for k in self.row_ptr[c]..self.row_ptr[c + 1] {
                let w = alpha * self.values[k].conj();
                let xk = &xs[self.col_idx[k] * rows..(self.col_idx[k] + 1) * rows];
                for (o, xv) in oc.iter_mut().zip(xk) {
                    *o += w * xv;
                }
            }
        };
        if n >= PAR_MIN_DIM {
            out.as_mut_slice().par_chunks_mut(rows).enumerate().for_each(kernel);
        } else {
            out.as_mut_slice().chunks_mut(rows).enumerate().for_each(kernel);
        }
    }

    pub fn mul_dense(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        self.left_mul_acc(x, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `x · A†`
    pub fn dense_mul_adjoint(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        self.right_mul_adjoint_acc(x, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// Principal submatrix on the given (ascending) index set.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let t = keep.iter().enumerate().flat_map(|(nr, &r)| {
            let map = &map;
            self.row(r).filter_map(move |(c, v)| (map[c] != usize::MAX).then_some((nr, map[c], v)))
        });
        Self::from_triplets(keep.len(), t.collect::<Vec<_>>())
    }

    /// Text dump, one `row,col,re,im` line per stored entry.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (r, c, v) in self.triplets() {
            out.push_str(&format!("{},{},{},{}\n", r, c, fmt17(v.re), fmt17(v.im)));
        }
        out
    }
}

/// Dense `A · B` through the packed complex kernel of `matrixmultiply`.
pub fn gemm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(b.nrows(), k, "inner dimensions differ");
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let std = matrixmultiply::CGemmOption::Standard;
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; all three buffers
    // are column-major with the strides given and `c` does not alias a or b.
    unsafe {
        matrixmultiply::zgemm(
            std,
            std,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}
