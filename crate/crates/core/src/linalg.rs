//! Packed symmetric matrices and a cyclic Jacobi eigensolver.
//!
//! `SymMat` stores only the upper triangle, row by row:
//! `(0,0) (0,1) .. (0,N-1) (1,1) .. (N-1,N-1)`. A tensor field over an image
//! is then just `N(N+1)/2` planes laid out in the same order.

use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Convergence threshold on the off-diagonal Frobenius norm, relative to `‖m‖_F`.
pub const OFF_DIAGONAL_RTOL: f64 = 1e-14;

/// Number of packed entries of an `dim × dim` symmetric matrix.
pub const fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Position of entry `(i, j)` in the packed upper triangle.
#[inline]
pub fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * dim - r * r.saturating_sub(1) / 2 + (c - r)
}

/// Symmetric `N × N` matrix with packed upper-triangular storage.
#[derive(Clone, PartialEq)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        SymMat {
            dim,
            data: vec![0.0; packed_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from packed upper-triangular values.
    pub fn from_packed(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != packed_len(dim) {
            return Err(Error::DimMismatch(format!(
                "{} packed values for a {dim}x{dim} symmetric matrix (need {})",
                data.len(),
                packed_len(dim)
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("symmetric matrix entries must be finite"));
        }
        Ok(SymMat { dim, data })
    }

    /// Builds from a dense row-major matrix, taking the upper triangle.
    /// Fails if the input is not square or not symmetric to `1e-12` relative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimMismatch("matrix is not square".into()));
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::param(format!("matrix is not symmetric at ({i},{j})")));
                }
                m.set(i, j, rows[i][j]);
            }
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("symmetric matrix entries must be finite"));
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = packed_index(self.dim, i, j);
        self.data[k] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm, counting each off-diagonal entry twice.
    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    /// `self += c · other`
    pub fn add_scaled(&mut self, other: &SymMat, c: f64) {
        assert_eq!(self.dim, other.dim, "SymMat dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn scaled(&self, c: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &SymMat) -> f64 {
        let mut d = self.clone();
        d.add_scaled(other, -1.0);
        d.frobenius_norm()
    }
}

impl fmt::Debug for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_dense()).finish()
    }
}

/// `v vᵀ`
pub fn outer(v: &[f64]) -> SymMat {
    let dim = v.len();
    let mut m = SymMat::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            m.set(i, j, v[i] * v[j]);
        }
    }
    m
}

/// Eigenvalues sorted descending, each paired with a unit eigenvector.
#[derive(Clone, Debug)]
pub struct EigenDecomp {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("empty decomposition")
    }

    /// `V · diag(λ) · Vᵀ`
    pub fn reconstruct(&self) -> SymMat {
        let mut m = SymMat::zeros(self.dim());
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            m.add_scaled(&outer(v), *lambda);
        }
        m
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvectors are normalised so their first nonzero component is positive.
/// Equal eigenvalues keep the order in which the rotations left them.
pub fn eig_sym(m: &SymMat) -> Result<EigenDecomp> {
    let n = m.dim();
    if m.packed().iter().any(|v| !v.is_finite()) {
        return Err(Error::param("eig_sym requires finite entries"));
    }
    let mut a = m.to_dense();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let threshold = OFF_DIAGONAL_RTOL * m.frobenius_norm();
    let off_norm = |a: &[Vec<f64>]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += 2.0 * a[i][j] * a[i][j];
            }
        }
        acc.sqrt()
    };

    if n == 2 {
        // A single rotation diagonalises a 2x2 block exactly.
        rotate(&mut a, &mut v, 0, 1);
    } else {
        let mut sweeps = 0;
        loop {
            let off = off_norm(&a);
            if off <= threshold {
                break;
            }
            if sweeps == MAX_SWEEPS {
                return Err(Error::NoConvergence { sweeps, off_norm: off });
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
            sweeps += 1;
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][k]).collect();
            canonical_sign(&mut col);
            (a[k][k], col)
        })
        .collect();
    // stable: ties keep Jacobi order
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite eigenvalues"));

    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    Ok(EigenDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// Annihilates `a[p][q]` with a plane rotation and accumulates it into `v`.
fn rotate(a: &mut [Vec<f64>], v: &mut [Vec<f64>], p: usize, q: usize) {
    let apq = a[p][q];
    if apq == 0.0 {
        return;
    }
    let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.len();
    for row in a.iter_mut() {
        let (akp, akq) = (row[p], row[q]);
        row[p] = c * akp - s * akq;
        row[q] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[p][k], a[q][k]);
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    a[p][q] = 0.0;
    a[q][p] = 0.0;
    for row in v.iter_mut() {
        let (vkp, vkq) = (row[p], row[q]);
        row[p] = c * vkp - s * vkq;
        row[q] = s * vkp + c * vkq;
    }
}

/// Components below this magnitude are treated as zero by the sign convention.
const SIGN_EPS: f64 = 1e-12;

fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|c| c.abs() > SIGN_EPS) {
        if *first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// True iff the smallest eigenvalue is `≥ -tol`.
pub fn is_psd(m: &SymMat, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::param("PSD tolerance must be nonnegative"));
    }
    Ok(eig_sym(m)?.min_eigenvalue() >= -tol)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Sum with a fixed binary reduction tree, so the result depends only on
/// the input order and length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
