//! Text embedding orthogonalization.
//!
//! The class text matrix `T` (one column per class) is replaced by the matrix
//! with orthonormal columns closest to it in Frobenius norm. With the thin SVD
//! `T = U S V^T` that matrix is `U V^T`, unique when `T` has full column rank,
//! and its squared distance to `T` is `sum_i (s_i - 1)^2`.

use alloc::vec::Vec;

use crate::dataset::TextMatrix;
use crate::linalg::{svd_jacobi, Svd};
use crate::{Error, Result};

/// Smallest admissible `sigma_min / sigma_max` of the text matrix.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Orthonormal text frame plus its squared Frobenius distance to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoTextMatrix {
    matrix: TextMatrix,
    residual: f64,
    singular_values: Vec<f64>,
}

impl OrthoTextMatrix {
    pub fn matrix(&self) -> &TextMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> TextMatrix {
        self.matrix
    }

    /// `||U V^T - T||_F^2`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Singular values of the input, nonincreasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }
}

impl core::ops::Deref for OrthoTextMatrix {
    type Target = TextMatrix;
    fn deref(&self) -> &TextMatrix {
        &self.matrix
    }
}

pub fn teo_project(t: &TextMatrix) -> Result<OrthoTextMatrix> {
    let (dim, classes) = (t.dim(), t.n_classes());
    if dim < classes {
        return Err(Error::DimTooSmall { dim, classes });
    }
    let Svd { u, sigma, v } = svd_jacobi(t.matrix());
    let ratio = match sigma[0] {
        s if s > 0.0 => sigma[classes - 1] / s,
        _ => 0.0,
    };
    if !(ratio > RANK_TOLERANCE) {
        return Err(Error::RankDeficient { ratio, tolerance: RANK_TOLERANCE });
    }
    let projected = u.matmul_transpose(&v);
    let residual = projected.sub(t.matrix()).frobenius_norm_sq();
    Ok(OrthoTextMatrix { matrix: TextMatrix::new(projected)?, residual, singular_values: sigma })
}
