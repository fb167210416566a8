//! Joint 2-D projection of image and text embeddings onto the top two
//! principal axes of the image set, for external plotting.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{ImageRows, TextMatrix};
use crate::linalg::{dot, norm, normalize_in_place, Matrix};
use crate::rng::GaussianStream;
use crate::{Error, Result};

const BLOCK: usize = 6;
const MAX_ITERS: usize = 5000;
const CONVERGED: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PointKind {
    Image,
    Text,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Image => "image",
            PointKind::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point2d {
    pub x: f64,
    pub y: f64,
    pub kind: PointKind,
    /// Empty for text points.
    pub subject_id: String,
    pub class_id: usize,
}

/// Affine map `v -> A^T (v - mean)` with `A` the two leading principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaPlane {
    pub mean: Vec<f64>,
    /// `d x 2`, orthonormal columns, first axis has the larger variance.
    pub axes: Matrix,
}

impl PcaPlane {
    pub fn fit<I: ImageRows + ?Sized>(images: &I) -> Result<Self> {
        let (n, d) = (images.len(), images.dim());
        if d < 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: d });
        }
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut rows = vec![0.0; n * d];
        for (i, chunk) in rows.chunks_exact_mut(d).enumerate() {
            images.row_into(i, chunk);
        }
        let mut mean = vec![0.0; d];
        for chunk in rows.chunks_exact(d) {
            mean.iter_mut().zip(chunk).for_each(|(m, x)| *m += x / n as f64);
        }
        let mut cov = Matrix::zeros(d, d);
        let mut centered = vec![0.0; d];
        for chunk in rows.chunks_exact(d) {
            centered.iter_mut().zip(chunk.iter().zip(&mean)).for_each(|(c, (x, m))| *c = x - m);
            for j in 0..d {
                let cj = centered[j];
                if cj == 0.0 {
                    continue;
                }
                for (dst, ci) in cov.col_mut(j).iter_mut().zip(&centered) {
                    *dst += ci * cj;
                }
            }
        }
        let axes = leading_axes(&cov, 2);
        Ok(Self { mean, axes })
    }

    pub fn project(&self, v: &[f64]) -> (f64, f64) {
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        (dot(self.axes.col(0), &centered), dot(self.axes.col(1), &centered))
    }

    /// Point of the plane with coordinates `(x, y)`.
    pub fn lift(&self, x: f64, y: f64) -> Vec<f64> {
        (0..self.mean.len()).map(|j| self.mean[j] + x * self.axes[(j, 0)] + y * self.axes[(j, 1)]).collect()
    }
}

/// Top `k` eigenvectors of a symmetric PSD matrix by block subspace iteration,
/// each with its largest-magnitude entry made positive.
fn leading_axes(sym: &Matrix, k: usize) -> Matrix {
    let d = sym.rows();
    let block = BLOCK.min(d).max(k);
    let mut g = GaussianStream::new(0x5ca1ab1e, 0);
    let mut q = Matrix::zeros(d, block);
    for j in 0..block {
        g.fill_normal(q.col_mut(j));
    }
    q = orthonormalize_or_complete(&q);

    for _ in 0..MAX_ITERS {
        let next = orthonormalize_or_complete(&sym.matmul(&q));
        let settled = (0..k).all(|j| 1.0 - dot(next.col(j), q.col(j)).abs() < CONVERGED);
        q = next;
        if settled {
            break;
        }
    }

    let mut axes = Matrix::from_columns(d, &(0..k).map(|j| q.col(j)).collect::<Vec<_>>());
    for j in 0..k {
        let col = axes.col_mut(j);
        let pivot = col.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
    axes
}

/// Gram-Schmidt that replaces numerically dependent columns by the unit basis
/// vector with the largest residual, so a rank-deficient block still yields
/// orthonormal columns.
fn orthonormalize_or_complete(z: &Matrix) -> Matrix {
    let (d, k) = (z.rows(), z.cols());
    let scale = z.columns().map(norm).fold(0.0, f64::max);
    let mut q = Matrix::zeros(d, k);
    for j in 0..k {
        let mut v = z.col(j).to_vec();
        reorthogonalize(&q, j, &mut v);
        if !(norm(&v) > 1e-10 * scale) {
            v = (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    reorthogonalize(&q, j, &mut e);
                    e
                })
                .max_by(|a, b| norm(a).total_cmp(&norm(b)))
                .expect("d >= 1");
        }
        normalize_in_place(&mut v, 0.0);
        q.col_mut(j).copy_from_slice(&v);
    }
    q
}

fn reorthogonalize(q: &Matrix, upto: usize, v: &mut [f64]) {
    for _ in 0..2 {
        for k in 0..upto {
            let r = dot(q.col(k), v);
            v.iter_mut().zip(q.col(k)).for_each(|(x, y)| *x -= r * y);
        }
    }
}

/// Projects every image row and every text column onto the image-set PCA plane.
/// Images come first, in record order, then texts in class order.
pub fn export_2d<I: ImageRows + ?Sized>(images: &I, texts: &TextMatrix) -> Result<Vec<Point2d>> {
    if texts.dim() != images.dim() {
        return Err(Error::DimensionMismatch { expected: images.dim(), found: texts.dim() });
    }
    let plane = PcaPlane::fit(images)?;
    let mut out = Vec::with_capacity(images.len() + texts.n_classes());
    let mut row = vec![0.0; images.dim()];
    for i in 0..images.len() {
        images.row_into(i, &mut row);
        let (x, y) = plane.project(&row);
        out.push(Point2d {
            x,
            y,
            kind: PointKind::Image,
            subject_id: images.subject_id(i).to_string(),
            class_id: images.class_id(i),
        });
    }
    for c in 0..texts.n_classes() {
        let (x, y) = plane.project(texts.column(c));
        out.push(Point2d { x, y, kind: PointKind::Text, subject_id: String::new(), class_id: c });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, EmbeddingRecord};

    fn line_dataset() -> Dataset {
        // spread mostly along (1, 1, 0), a little along (0, 0, 1)
        let pts: [[f32; 3]; 4] = [[2.0, 2.0, 0.1], [-2.0, -2.0, 0.1], [1.0, 1.0, -0.1], [-1.0, -1.0, -0.1]];
        let records = pts
            .iter()
            .enumerate()
            .map(|(i, p)| EmbeddingRecord {
                subject_id: "s".into(),
                sample_id: alloc::format!("{i}"),
                class_id: i % 2,
                vector: p.to_vec(),
            })
            .collect();
        Dataset::new(3, records).unwrap()
    }

    #[test]
    fn first_axis_follows_largest_spread() {
        let plane = PcaPlane::fit(&line_dataset()).unwrap();
        let a = plane.axes.col(0);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0] - h).abs() < 1e-9 && (a[1] - h).abs() < 1e-9 && a[2].abs() < 1e-9, "{a:?}");
        assert!(dot(plane.axes.col(0), plane.axes.col(1)).abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_on_the_plane() {
        let plane = PcaPlane::fit(&line_dataset()).unwrap();
        let (x, y) = plane.project(&[0.3, -1.2, 0.7]);
        let (x2, y2) = plane.project(&plane.lift(x, y));
        assert!((x - x2).abs() < 1e-12 && (y - y2).abs() < 1e-12);
    }

    #[test]
    fn export_counts_and_errors() {
        let ds = line_dataset();
        let t = TextMatrix::from_columns(3, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let pts = export_2d(&ds, &t).unwrap();
        assert_eq!(pts.len(), 4 + 2);
        assert_eq!(pts[4].kind, PointKind::Text);

        let one = Dataset::new(
            1,
            alloc::vec![EmbeddingRecord { subject_id: "s".into(), sample_id: "0".into(), class_id: 0, vector: alloc::vec![1.0] }],
        )
        .unwrap();
        let t1 = TextMatrix::from_columns(1, &[[1.0], [2.0]]).unwrap();
        assert!(matches!(export_2d(&one, &t1), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
    }
}
