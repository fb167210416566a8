//! Cosine argmax classification against class text embeddings.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{ImageRows, TextMatrix};
use crate::linalg::dot;
use crate::{Error, Result, EPS_ZERO};

/// Class id of the non-distracted (safe driving) class.
pub const SAFE_CLASS: usize = 0;

/// Top-k depth used in reports.
pub const REPORT_TOP_K: usize = 3;

/// Scores and decisions for one image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionRow {
    pub subject_id: String,
    pub sample_id: String,
    pub class_id_true: usize,
    /// Cosine similarity to each class text embedding.
    pub similarities: Vec<f64>,
    /// Class ids by similarity descending, ties by ascending id.
    pub ranking: Vec<usize>,
    pub predicted_class: usize,
    /// `max_{c >= 1} sim[c] - sim[0]`; positive exactly when the argmax is a distracted class.
    pub distraction_score: f64,
    /// `true` = distracted.
    pub predicted_binary: bool,
    pub fallback_used: bool,
}

impl PredictionRow {
    /// Derives ranking, argmax and the binary fields from a similarity vector
    /// of length at least 2.
    pub fn from_similarities(
        subject_id: impl Into<String>,
        sample_id: impl Into<String>,
        class_id_true: usize,
        similarities: Vec<f64>,
        fallback_used: bool,
    ) -> Self {
        assert!(similarities.len() >= 2, "need at least two classes");
        let ranking = rank(&similarities);
        let predicted_class = ranking[0];
        let best_distracted = similarities[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            subject_id: subject_id.into(),
            sample_id: sample_id.into(),
            class_id_true,
            distraction_score: best_distracted - similarities[SAFE_CLASS],
            predicted_binary: predicted_class != SAFE_CLASS,
            ranking,
            predicted_class,
            similarities,
            fallback_used,
        }
    }

    pub fn in_top_k(&self, class_id: usize, k: usize) -> bool {
        self.ranking.iter().take(k).any(|&c| c == class_id)
    }
}

fn rank(similarities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..similarities.len()).collect();
    order.sort_by(|&a, &b| similarities[b].total_cmp(&similarities[a]).then(a.cmp(&b)));
    order
}

/// `a . b / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let (na2, nb2) = (dot(a, a), dot(b, b));
    if na2 < EPS_ZERO * EPS_ZERO || nb2 < EPS_ZERO * EPS_ZERO {
        return Err(Error::ZeroNorm);
    }
    Ok(scaled_cosine(dot(a, b), na2, nb2))
}

// sqrt of the product of squared norms: sqrt(x * x) == |x| exactly, so a
// vector against itself scores exactly 1
fn scaled_cosine(ab: f64, na2: f64, nb2: f64) -> f64 {
    (ab / libm::sqrt(na2 * nb2)).clamp(-1.0, 1.0)
}

/// Hard binary rule: distracted unless the argmax class is the safe class.
pub fn binary_decision(row: &PredictionRow) -> bool {
    row.predicted_class != SAFE_CLASS
}

/// Scores every image against every text column and ranks the classes.
pub fn classify<I: ImageRows + ?Sized>(images: &I, texts: &TextMatrix) -> Result<Vec<PredictionRow>> {
    let (dim, n_classes) = (texts.dim(), texts.n_classes());
    if images.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: images.dim() });
    }
    if n_classes < 2 {
        return Err(Error::TooFewClasses(n_classes));
    }
    let text_norms2: Vec<f64> = (0..n_classes).map(|c| dot(texts.column(c), texts.column(c))).collect();
    if text_norms2.iter().any(|&n| n < EPS_ZERO * EPS_ZERO) {
        return Err(Error::ZeroNorm);
    }

    let mut row = vec![0.0; dim];
    let mut out = Vec::with_capacity(images.len());
    for i in 0..images.len() {
        let class_id = images.class_id(i);
        if class_id >= n_classes {
            return Err(Error::ClassOutOfRange { class_id, class_count: n_classes });
        }
        images.row_into(i, &mut row);
        let n2 = dot(&row, &row);
        if n2 < EPS_ZERO * EPS_ZERO {
            return Err(Error::ZeroNorm);
        }
        let sims = (0..n_classes)
            .map(|c| scaled_cosine(dot(&row, texts.column(c)), n2, text_norms2[c]))
            .collect();
        out.push(PredictionRow::from_similarities(
            images.subject_id(i).to_string(),
            images.sample_id(i).to_string(),
            class_id,
            sims,
            images.fallback_used(i),
        ));
    }
    Ok(out)
}
