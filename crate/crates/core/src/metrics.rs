//! Evaluation suite: Top-k accuracy, confusion matrix, macro precision/recall,
//! precision-recall curve with average precision, and false negative rate.
//!
//! Binary metrics treat "distracted" (true class != 0) as the positive label.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::classify::{PredictionRow, REPORT_TOP_K, SAFE_CLASS};
use crate::{Error, Result};

fn check_aligned(rows: &[PredictionRow], truths: &[usize]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    if rows.len() != truths.len() {
        return Err(Error::LengthMismatch { left: rows.len(), right: truths.len() });
    }
    Ok(())
}

/// Fraction of rows whose true class is among the first `k` ranked classes.
pub fn topk_accuracy(rows: &[PredictionRow], truths: &[usize], k: usize) -> Result<f64> {
    check_aligned(rows, truths)?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".to_string()));
    }
    let hits = rows.iter().zip(truths).filter(|(r, &t)| r.in_top_k(t, k)).count();
    Ok(hits as f64 / rows.len() as f64)
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n_classes = counts.len();
        if let Some(row) = counts.iter().find(|r| r.len() != n_classes) {
            return Err(Error::DimensionMismatch { expected: n_classes, found: row.len() });
        }
        Ok(Self { n_classes, counts })
    }

    pub fn from_predictions(rows: &[PredictionRow], truths: &[usize], n_classes: usize) -> Result<Self> {
        check_aligned(rows, truths)?;
        let mut counts = vec![vec![0u64; n_classes]; n_classes];
        for (r, &t) in rows.iter().zip(truths) {
            for c in [t, r.predicted_class] {
                if c >= n_classes {
                    return Err(Error::ClassOutOfRange { class_id: c, class_count: n_classes });
                }
            }
            counts[t][r.predicted_class] += 1;
        }
        Ok(Self { n_classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.counts[c][c]).sum()
    }

    /// Per-class precision; a class never predicted gets 0.
    pub fn precision(&self, c: usize) -> f64 {
        ratio(self.counts[c][c], self.col_sum(c))
    }

    /// Per-class recall; a class never present gets 0.
    pub fn recall(&self, c: usize) -> f64 {
        ratio(self.counts[c][c], self.row_sum(c))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Unweighted means of per-class precision and recall over all classes,
/// zero-denominator classes included as 0.
pub fn macro_precision_recall(cm: &ConfusionMatrix) -> (f64, f64) {
    let n = cm.n_classes() as f64;
    let p: f64 = (0..cm.n_classes()).map(|c| cm.precision(c)).sum();
    let r: f64 = (0..cm.n_classes()).map(|c| cm.recall(c)).sum();
    (p / n, r / n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrPoint {
    /// Rows with `score >= threshold` are predicted positive.
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Points in order of decreasing threshold; recall is nondecreasing along it.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    points: Vec<PrPoint>,
}

impl PrCurve {
    pub fn points(&self) -> &[PrPoint] {
        &self.points
    }

    /// The operating point of the rule `score > t`: the last sweep point whose
    /// threshold exceeds `t`. `None` if no score exceeds `t`.
    pub fn point_above(&self, t: f64) -> Option<PrPoint> {
        self.points.iter().take_while(|p| p.threshold > t).last().copied()
    }
}

/// Sweeps the distinct score values from high to low; tied scores enter together.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<PrCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite { record: i, coord: 0 });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / positives as f64,
        });
    }
    Ok(PrCurve { points })
}

/// Average precision: `sum_n (R_n - R_{n-1}) P_n` with `R_0 = 0`.
pub fn auprc(curve: &PrCurve) -> f64 {
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for p in curve.points() {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    ap
}

/// 2x2 counts of the hard binary rule against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn from_predictions(rows: &[PredictionRow], truths: &[usize]) -> Result<Self> {
        check_aligned(rows, truths)?;
        let mut c = Self::default();
        for (r, &t) in rows.iter().zip(truths) {
            match (t != SAFE_CLASS, r.predicted_binary) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

/// Share of truly distracted rows the hard rule calls safe.
pub fn fnr(rows: &[PredictionRow], truths: &[usize]) -> Result<f64> {
    let c = BinaryCounts::from_predictions(rows, truths)?;
    if c.tp + c.fn_ == 0 {
        return Err(Error::NoDistracted);
    }
    Ok(c.fn_ as f64 / (c.fn_ + c.tp) as f64)
}

/// Which pipeline stages produced the predictions.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfigEcho {
    /// Engineered prompts in use; `None` when no prompt file was involved.
    pub pe: Option<bool>,
    pub dad: bool,
    pub teo: bool,
    pub pre_normalize: bool,
    pub calibration_fraction: f64,
}

/// Estimator choices, repeated in every report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Conventions {
    pub precision_recall_averaging: String,
    pub zero_denominator: String,
    pub auprc_estimator: String,
    pub binary_score: String,
    pub binary_positive: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            precision_recall_averaging: "macro".into(),
            zero_denominator: "class contributes 0".into(),
            auprc_estimator: "average precision (step), not trapezoidal".into(),
            binary_score: "max over distracted classes of cosine minus cosine of class 0".into(),
            binary_positive: "distracted (class != 0)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub top1: f64,
    pub top3: f64,
    pub k: usize,
    pub topk: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub auprc: f64,
    pub fnr: f64,
    pub binary_precision: f64,
    pub binary_recall: f64,
    pub n_samples: usize,
    pub n_subjects: usize,
    pub n_fallback: usize,
    pub confusion: ConfusionMatrix,
    pub config: ConfigEcho,
    pub conventions: Conventions,
}

impl MetricsReport {
    /// Column names of [`MetricsReport::scalars`].
    pub const SCALAR_FIELDS: [&'static str; 13] = [
        "top1",
        "top3",
        "k",
        "topk",
        "macro_precision",
        "macro_recall",
        "auprc",
        "fnr",
        "binary_precision",
        "binary_recall",
        "n_samples",
        "n_subjects",
        "n_fallback",
    ];

    pub fn scalars(&self) -> [f64; 13] {
        [
            self.top1,
            self.top3,
            self.k as f64,
            self.topk,
            self.macro_precision,
            self.macro_recall,
            self.auprc,
            self.fnr,
            self.binary_precision,
            self.binary_recall,
            self.n_samples as f64,
            self.n_subjects as f64,
            self.n_fallback as f64,
        ]
    }
}

/// Assembles every metric. `k` is an extra Top-k depth reported beside Top-1/Top-3.
pub fn evaluate(rows: &[PredictionRow], truths: &[usize], k: usize, config: ConfigEcho) -> Result<MetricsReport> {
    check_aligned(rows, truths)?;
    let n_classes = rows[0].similarities.len();
    let confusion = ConfusionMatrix::from_predictions(rows, truths, n_classes)?;
    let top1 = topk_accuracy(rows, truths, 1)?;
    let top3 = topk_accuracy(rows, truths, REPORT_TOP_K)?;
    let topk = topk_accuracy(rows, truths, k)?;

    // single-label data: micro precision = micro recall = accuracy
    let micro = confusion.trace() as f64 / confusion.total() as f64;
    debug_assert_eq!(micro, top1);

    let (macro_precision, macro_recall) = macro_precision_recall(&confusion);
    let scores: Vec<f64> = rows.iter().map(|r| r.distraction_score).collect();
    let labels: Vec<bool> = truths.iter().map(|&t| t != SAFE_CLASS).collect();
    let curve = pr_curve(&scores, &labels).map_err(|e| match e {
        Error::NoPositives => Error::NoDistracted,
        e => e,
    })?;
    let binary = BinaryCounts::from_predictions(rows, truths)?;

    Ok(MetricsReport {
        top1,
        top3,
        k,
        topk,
        macro_precision,
        macro_recall,
        auprc: auprc(&curve),
        fnr: fnr(rows, truths)?,
        binary_precision: binary.precision(),
        binary_recall: binary.recall(),
        n_samples: rows.len(),
        n_subjects: rows.iter().map(|r| r.subject_id.as_str()).collect::<BTreeSet<_>>().len(),
        n_fallback: rows.iter().filter(|r| r.fallback_used).count(),
        confusion,
        config,
        conventions: Conventions::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(truth: usize, sims: Vec<f64>) -> PredictionRow {
        PredictionRow::from_similarities("s", "x", truth, sims, false)
    }

    #[test]
    fn topk_membership() {
        let r = row(1, vec![0.5, 0.1, 0.9]);
        assert_eq!(r.ranking, vec![2, 0, 1]);
        assert_eq!(topk_accuracy(&[r.clone()], &[1], 3).unwrap(), 1.0);
        assert_eq!(topk_accuracy(&[r.clone()], &[1], 1).unwrap(), 0.0);
        assert_eq!(topk_accuracy(&[], &[], 1), Err(Error::Empty));
        assert!(matches!(topk_accuracy(&[r], &[1], 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn macro_pr_examples() {
        let diag = ConfusionMatrix::from_counts(vec![vec![3, 0], vec![0, 4]]).unwrap();
        assert_eq!(macro_precision_recall(&diag), (1.0, 1.0));

        let cm = ConfusionMatrix::from_counts(vec![vec![5, 5], vec![0, 10]]).unwrap();
        let (p, r) = macro_precision_recall(&cm);
        assert!((p - (1.0 + 10.0 / 15.0) / 2.0).abs() < 1e-15);
        assert!((p - 0.8333).abs() < 1e-4);
        assert_eq!(r, 0.75);

        // class 2 never predicted, never true
        let cm3 = ConfusionMatrix::from_counts(vec![vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 0]]).unwrap();
        let (p, r) = macro_precision_recall(&cm3);
        assert!((p - 2.0 / 3.0).abs() < 1e-15 && (r - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pr_curve_hand_sweep() {
        let c = pr_curve(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        let pr: Vec<(f64, f64)> = c.points().iter().map(|p| (p.precision, p.recall)).collect();
        assert_eq!(pr, vec![(1.0, 0.5), (0.5, 0.5), (2.0 / 3.0, 1.0), (0.5, 1.0)]);
        assert!((auprc(&c) - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn pr_curve_ties_enter_together() {
        let c = pr_curve(&[0.5, 0.5, 0.1], &[true, false, true]).unwrap();
        assert_eq!(c.points().len(), 2);
        assert_eq!(c.points()[0].precision, 0.5);
        assert_eq!(c.points()[0].recall, 0.5);
    }

    #[test]
    fn pr_curve_degenerate_cases() {
        let sep = pr_curve(&[3.0, 2.0, 1.0, 0.0], &[true, true, false, false]).unwrap();
        assert!(sep.points().iter().any(|p| p.precision == 1.0 && p.recall == 1.0));
        assert_eq!(auprc(&sep), 1.0);
        let all = pr_curve(&[0.3, 0.1, 0.2], &[true, true, true]).unwrap();
        assert!(all.points().iter().all(|p| p.precision == 1.0));
        assert_eq!(pr_curve(&[0.1], &[false]), Err(Error::NoPositives));
    }

    #[test]
    fn point_above_threshold() {
        let c = pr_curve(&[0.9, 0.8, -0.1, 0.0], &[true, false, true, false]).unwrap();
        let p = c.point_above(0.0).unwrap();
        assert_eq!(p.threshold, 0.8);
        assert!(c.point_above(1.0).is_none());
    }

    #[test]
    fn fnr_counts() {
        let distracted = row(1, vec![0.0, 1.0]);
        let missed = row(1, vec![1.0, 0.0]);
        let mut rows = vec![distracted.clone(); 7];
        rows.extend(vec![missed; 3]);
        let truths = vec![1; 10];
        assert!((fnr(&rows, &truths).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(fnr(&vec![distracted; 4], &[1; 4]).unwrap(), 0.0);
        assert_eq!(fnr(&[row(0, vec![1.0, 0.0])], &[0]), Err(Error::NoDistracted));
    }

    #[test]
    fn perfect_report() {
        let rows: Vec<PredictionRow> = (0..4)
            .map(|c| {
                let mut s = vec![0.0; 4];
                s[c] = 1.0;
                row(c, s)
            })
            .collect();
        let truths = [0, 1, 2, 3];
        let cfg = ConfigEcho { pe: None, dad: true, teo: true, pre_normalize: false, calibration_fraction: 1.0 };
        let r = evaluate(&rows, &truths, 3, cfg.clone()).unwrap();
        assert_eq!((r.top1, r.top3, r.macro_precision, r.macro_recall, r.auprc, r.fnr), (1.0, 1.0, 1.0, 1.0, 1.0, 0.0));
        assert_eq!(r.config, cfg);
        assert_eq!(r.confusion.total(), 4);
    }
}
