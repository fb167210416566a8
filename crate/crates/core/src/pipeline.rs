//! End-to-end zero-shot pipeline: optional decoupling, optional text
//! orthogonalization, classification and evaluation.

use alloc::vec::Vec;

use crate::classify::{classify, PredictionRow};
use crate::dataset::{Dataset, TextMatrix};
use crate::decouple::{apply_dad_with, compute_subject_means_with, DadOptions, DecoupledDataset};
use crate::metrics::{evaluate, ConfigEcho, MetricsReport};
use crate::teo::teo_project;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Toggles {
    pub dad: bool,
    pub teo: bool,
}

impl Toggles {
    pub const NAIVE: Self = Self { dad: false, teo: false };
    pub const FULL: Self = Self { dad: true, teo: true };

    /// Ablation grid order: naive, DAD only, TEO only, both.
    pub const GRID: [Self; 4] = [
        Self::NAIVE,
        Self { dad: true, teo: false },
        Self { dad: false, teo: true },
        Self::FULL,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineOptions {
    pub toggles: Toggles,
    pub dad: DadOptions,
}

impl PipelineOptions {
    pub fn new(toggles: Toggles) -> Self {
        Self { toggles, dad: DadOptions::default() }
    }

    pub fn echo(&self, pe: Option<bool>) -> ConfigEcho {
        ConfigEcho {
            pe,
            dad: self.toggles.dad,
            teo: self.toggles.teo,
            pre_normalize: self.dad.pre_normalize,
            calibration_fraction: self.dad.calibration_fraction,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub images: DecoupledDataset,
    pub texts: TextMatrix,
    /// Squared distance moved by the text projection, when it ran.
    pub teo_residual: Option<f64>,
    pub rows: Vec<PredictionRow>,
}

/// Transforms images and texts according to `opts` without classifying.
pub fn transform(images: &Dataset, texts: &TextMatrix, opts: &PipelineOptions) -> Result<(DecoupledDataset, TextMatrix, Option<f64>)> {
    opts.dad.validate()?;
    let decoupled = if opts.toggles.dad {
        let means = compute_subject_means_with(images, &opts.dad)?;
        apply_dad_with(images, &means, &opts.dad)?
    } else {
        DecoupledDataset::passthrough(images, opts.dad.pre_normalize)
    };
    let (texts, residual) = if opts.toggles.teo {
        let ortho = teo_project(texts)?;
        let residual = ortho.residual();
        (ortho.into_matrix(), Some(residual))
    } else {
        (texts.clone(), None)
    };
    Ok((decoupled, texts, residual))
}

pub fn run_pipeline(images: &Dataset, texts: &TextMatrix, opts: &PipelineOptions) -> Result<PipelineOutput> {
    let (decoupled, texts, teo_residual) = transform(images, texts, opts)?;
    let rows = classify(&decoupled, &texts)?;
    Ok(PipelineOutput { images: decoupled, texts, teo_residual, rows })
}

/// Runs the pipeline and evaluates it against the dataset's class ids.
pub fn run_and_evaluate(
    images: &Dataset,
    texts: &TextMatrix,
    opts: &PipelineOptions,
    k: usize,
    pe: Option<bool>,
) -> Result<(PipelineOutput, MetricsReport)> {
    let out = run_pipeline(images, texts, opts)?;
    let report = evaluate(&out.rows, &images.truths(), k, opts.echo(pe))?;
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub toggles: Toggles,
    pub report: MetricsReport,
}

/// Evaluates the four DAD/TEO combinations on the same inputs, in [`Toggles::GRID`] order.
pub fn ablation_grid(
    images: &Dataset,
    texts: &TextMatrix,
    dad: DadOptions,
    k: usize,
    pe: Option<bool>,
) -> Result<Vec<AblationCell>> {
    Toggles::GRID
        .iter()
        .map(|&toggles| {
            let opts = PipelineOptions { toggles, dad };
            let (_, report) = run_and_evaluate(images, texts, &opts, k, pe)?;
            Ok(AblationCell { toggles, report })
        })
        .collect()
}
