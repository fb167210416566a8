//! Synthetic embeddings with a controllable subject-appearance confound and
//! controllably collapsed text prototypes.
//!
//! Generative model (our construction, not a model of any real encoder):
//!
//! ```text
//! image(s, c, i) = unit(beta * mu_c + alpha * a_s + sigma * eta)
//! text(c)        = unit((1 - gamma) * mu_c + gamma * m + 0.05 * zeta_c)
//! ```
//!
//! `mu_c` are orthonormal class prototypes (Gram-Schmidt on a Gaussian
//! matrix), `a_s` unit Gaussian subject directions, `m` the mean prototype,
//! `eta` and `zeta_c` standard Gaussian. Values are rounded to `f32` so that the
//! interchange format stores them exactly.
//!
//! Random streams (see [`crate::rng`]): prototypes use stream 0, subject
//! directions stream 1, text noise stream 2 and cell `(s, c)` stream
//! `16 + s * n_classes + c`. Records are ordered subject, class, sample.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, EmbeddingRecord, TextMatrix};
use crate::decouple::DadOptions;
use crate::linalg::{normalize_in_place, orthonormalize_columns, Matrix};
use crate::pipeline::{ablation_grid, AblationCell};
use crate::rng::GaussianStream;
use crate::{Error, Result};

const TEXT_NOISE: f64 = 0.05;
const CELL_STREAM_BASE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub seed: u64,
    pub dim: usize,
    pub n_classes: usize,
    pub n_subjects: usize,
    pub samples_per_cell: usize,
    /// Subject appearance strength, >= 0.
    pub alpha: f64,
    /// Class signal strength, > 0.
    pub beta: f64,
    /// Per-sample noise, >= 0.
    pub sigma: f64,
    /// Text collapse towards the mean prototype, in [0, 1].
    pub gamma: f64,
}

impl SynthConfig {
    /// `|S| = |C| = 10`, `d = 64`, 20 samples per cell, `alpha = 4`, `beta = 1`,
    /// `sigma = 0.3`, `gamma = 0.8`.
    pub fn confounded(seed: u64) -> Self {
        Self {
            seed,
            dim: 64,
            n_classes: 10,
            n_subjects: 10,
            samples_per_cell: 20,
            alpha: 4.0,
            beta: 1.0,
            sigma: 0.3,
            gamma: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2");
        }
        if self.dim < self.n_classes {
            return Err(Error::DimTooSmall { dim: self.dim, classes: self.n_classes });
        }
        if self.n_subjects == 0 || self.samples_per_cell == 0 {
            return bad("n_subjects and samples_per_cell must be at least 1");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and >= 0");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and > 0");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn n_records(&self) -> usize {
        self.n_subjects * self.n_classes * self.samples_per_cell
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub images: Dataset,
    pub texts: TextMatrix,
    /// Ground-truth class per record, in record order.
    pub truths: Vec<usize>,
    /// Orthonormal class prototypes, one column per class.
    pub prototypes: Matrix,
}

fn round_f32(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = f64::from(*x as f32));
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let (d, nc) = (cfg.dim, cfg.n_classes);

    let mut g = GaussianStream::new(cfg.seed, 0);
    let mut raw = Matrix::zeros(d, nc);
    for c in 0..nc {
        g.fill_normal(raw.col_mut(c));
    }
    let prototypes = orthonormalize_columns(&raw)
        .ok_or_else(|| Error::InvalidConfig("degenerate prototype draw".to_string()))?;

    let mut g = GaussianStream::new(cfg.seed, 1);
    let subjects: Vec<Vec<f64>> = (0..cfg.n_subjects)
        .map(|_| {
            let mut a = vec![0.0; d];
            // a zero draw has probability 0; retry keeps the stream well defined anyway
            loop {
                g.fill_normal(&mut a);
                if normalize_in_place(&mut a, 1e-12) {
                    break a;
                }
            }
        })
        .collect();

    let mut mean_proto = vec![0.0; d];
    for c in 0..nc {
        mean_proto.iter_mut().zip(prototypes.col(c)).for_each(|(m, p)| *m += p / nc as f64);
    }
    let mut g = GaussianStream::new(cfg.seed, 2);
    let mut zeta = vec![0.0; d];
    let text_cols: Vec<Vec<f64>> = (0..nc)
        .map(|c| {
            g.fill_normal(&mut zeta);
            let mut t: Vec<f64> = (0..d)
                .map(|j| (1.0 - cfg.gamma) * prototypes[(j, c)] + cfg.gamma * mean_proto[j] + TEXT_NOISE * zeta[j])
                .collect();
            normalize_in_place(&mut t, 1e-12);
            round_f32(&mut t);
            t
        })
        .collect();
    let texts = TextMatrix::from_columns(d, &text_cols)?;

    let mut records = Vec::with_capacity(cfg.n_records());
    let mut eta = vec![0.0; d];
    for (s, a) in subjects.iter().enumerate() {
        for c in 0..nc {
            let mut g = GaussianStream::new(cfg.seed, CELL_STREAM_BASE + (s * nc + c) as u64);
            for i in 0..cfg.samples_per_cell {
                g.fill_normal(&mut eta);
                let mut v: Vec<f64> = (0..d)
                    .map(|j| cfg.beta * prototypes[(j, c)] + cfg.alpha * a[j] + cfg.sigma * eta[j])
                    .collect();
                normalize_in_place(&mut v, 1e-12);
                records.push(EmbeddingRecord {
                    subject_id: format!("subject-{s:03}"),
                    sample_id: format!("c{c:02}-{i:04}"),
                    class_id: c,
                    vector: v.iter().map(|&x| x as f32).collect(),
                });
            }
        }
    }
    let truths = records.iter().map(|r| r.class_id).collect();
    let images = Dataset::new(d, records)?.with_class_count(nc)?;
    Ok(SynthData { images, texts, truths, prototypes })
}

/// Evaluates the naive / DAD / TEO / DAD+TEO grid on one generated dataset.
pub fn run_ablation(cfg: &SynthConfig) -> Result<Vec<AblationCell>> {
    let data = generate(cfg)?;
    ablation_grid(&data.images, &data.texts, DadOptions::default(), crate::classify::REPORT_TOP_K, None)
}
