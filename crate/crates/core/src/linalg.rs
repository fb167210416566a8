//! Small dense column-major kernels: vector helpers, one-sided Jacobi SVD and
//! Gram-Schmidt orthonormalization.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Scales `a` to unit Euclidean norm. Returns `false` and leaves `a` untouched
/// when its norm is below `eps`.
pub fn normalize_in_place(a: &mut [f64], eps: f64) -> bool {
    let n = norm(a);
    if n < eps {
        return false;
    }
    a.iter_mut().for_each(|x| *x /= n);
    true
}

/// Dense matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major data. Panics if the length is not `rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            let c = c.as_ref();
            assert_eq!(c.len(), rows, "column has wrong length");
            data.extend_from_slice(c);
        }
        Self { rows, cols: columns.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on 0, and a 0-row matrix has no data anyway
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let r = rhs[(k, j)];
                if r == 0.0 {
                    continue;
                }
                for (o, a) in out_col.iter_mut().zip(self.col(k)) {
                    *o += a * r;
                }
            }
        }
        out
    }

    /// `self * rhs^T`.
    pub fn matmul_transpose(&self, rhs: &Matrix) -> Self {
        self.matmul(&rhs.transpose())
    }

    pub fn sub(&self, rhs: &Matrix) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sq())
    }

    /// `self^T * self`, the Gram matrix of the columns.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let v = dot(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

/// Thin singular value decomposition `A = U diag(sigma) V^T` of an `m x n`
/// matrix with `m >= n`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m x n`, orthonormal columns for every nonzero singular value.
    pub u: Matrix,
    /// Nonincreasing.
    pub sigma: Vec<f64>,
    /// `n x n` orthogonal.
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        us.matmul_transpose(&self.v)
    }
}

const JACOBI_TOL: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Plane rotations are applied to column pairs of a working copy of `a` until
/// all columns are mutually orthogonal; the column norms are then the singular
/// values and the accumulated rotations form `V`. Columns whose singular value
/// is exactly zero yield a zero column in `U`.
///
/// Panics if `a` has more columns than rows.
pub fn svd_jacobi(a: &Matrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "svd_jacobi expects rows >= cols");
    let mut w = a.clone();
    let mut v = Matrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == 0.0 || libm::fabs(gamma) <= JACOBI_TOL * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = w.columns().map(norm).collect();
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            w.col_mut(j).iter_mut().for_each(|x| *x /= s);
        }
    }

    // sort nonincreasing, carrying U and V columns along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let u = Matrix::from_columns(m, &order.iter().map(|&j| w.col(j)).collect::<Vec<_>>());
    let v = Matrix::from_columns(n, &order.iter().map(|&j| v.col(j)).collect::<Vec<_>>());
    sigma = order.iter().map(|&j| sigma[j]).collect();

    Svd { u, sigma, v }
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows();
    let (lo, hi) = m.data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// Returns `None` if a column becomes numerically dependent on its predecessors.
pub fn orthonormalize_columns(a: &Matrix) -> Option<Matrix> {
    let mut q = a.clone();
    for j in 0..q.cols() {
        for _ in 0..2 {
            for k in 0..j {
                let (lo, hi) = q.data.split_at_mut(j * q.rows);
                let qk = &lo[k * q.rows..(k + 1) * q.rows];
                let qj = &mut hi[..q.rows];
                let r = dot(qk, qj);
                for (x, y) in qj.iter_mut().zip(qk) {
                    *x -= r * y;
                }
            }
        }
        if !normalize_in_place(q.col_mut(j), 1e-12 * norm(a.col(j)).max(f64::MIN_POSITIVE)) {
            return None;
        }
    }
    Some(q)
}
