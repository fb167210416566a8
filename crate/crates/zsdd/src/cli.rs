//! `zsdd` command line: `synth`, `classify`, `ablate`, `export-2d`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or arguments.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use zsdd_core::classify::SAFE_CLASS;
use zsdd_core::decouple::DadOptions;
use zsdd_core::metrics::pr_curve;
use zsdd_core::pca::export_2d;
use zsdd_core::pipeline::{ablation_grid, run_and_evaluate, transform, PipelineOptions, Toggles};
use zsdd_core::synth::{generate, SynthConfig};
use zsdd_core::{Dataset, PromptSet, TextMatrix};

use crate::output::{ablation_csv, pr_curve_csv, points_csv, predictions_jsonl, report_csv, report_json, write_atomic};
use crate::store::{load_dataset, load_prompts, load_text_sources, save_dataset, save_text_matrix, text_matrix};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "zsdd", version, about = "Zero-shot distracted-driver detection on cached embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic image/text embedding pair with a subject confound.
    Synth(SynthCmd),
    /// Classify image embeddings and evaluate the predictions.
    Classify(ClassifyCmd),
    /// Run the DAD x TEO grid (and the prompt swap when two prompt files are given).
    Ablate(AblateCmd),
    /// Project images and texts onto the image-set PCA plane for plotting.
    #[command(name = "export-2d")]
    Export2d(Export2dCmd),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Seed of all randomness; required.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 10)]
    pub subjects: usize,
    #[arg(long, default_value_t = 20)]
    pub samples_per_cell: usize,
    /// Subject appearance strength.
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    /// Class signal strength.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Per-sample noise.
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    /// Text collapse towards the mean prototype, in [0, 1].
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
}

impl SynthArgs {
    pub fn config(&self) -> Result<SynthConfig> {
        let seed = self.seed.ok_or_else(|| Error::invalid("--seed", "is required; no implicit seed is used"))?;
        let cfg = SynthConfig {
            seed,
            dim: self.dim,
            n_classes: self.classes,
            n_subjects: self.subjects,
            samples_per_cell: self.samples_per_cell,
            alpha: self.alpha,
            beta: self.beta,
            sigma: self.sigma,
            gamma: self.gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SynthCmd {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Directory receiving images.json/.f32 and texts.json/.f32.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DadArgs {
    /// Unit-normalize image embeddings before computing subject means.
    #[arg(long)]
    pub pre_normalize: bool,
    /// Fraction of each subject's records used to estimate its mean, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub calibration_fraction: f64,
}

impl DadArgs {
    fn options(&self) -> Result<DadOptions> {
        let f = self.calibration_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::invalid("--calibration-fraction", format!("must lie in (0, 1], got {f}")));
        }
        Ok(DadOptions { pre_normalize: self.pre_normalize, calibration_fraction: f })
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Image embedding manifest.
    #[arg(long)]
    pub images: PathBuf,
    /// Text embedding manifest(s); repeat to search several files for prompts.
    #[arg(long, required = true)]
    pub texts: Vec<PathBuf>,
    /// Prompt file; selects text embeddings by rendered prompt instead of class id.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyCmd {
    #[command(flatten)]
    pub input: InputArgs,
    /// Subtract per-subject mean image embeddings.
    #[arg(long)]
    pub dad: bool,
    /// Orthonormalize the class text embeddings.
    #[arg(long)]
    pub teo: bool,
    #[command(flatten)]
    pub dad_args: DadArgs,
    /// Extra Top-k depth reported beside Top-1 and Top-3.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Directory receiving predictions.jsonl and report.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write report.csv (header plus one row).
    #[arg(long)]
    pub csv: bool,
    /// Also write pr_curve.csv.
    #[arg(long)]
    pub pr_curve: bool,
}

#[derive(Debug, Args)]
pub struct AblateCmd {
    /// Generate the data instead of reading it (needs --seed).
    #[arg(long, conflicts_with_all = ["images", "texts", "prompts"])]
    pub synthetic: bool,
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub texts: Vec<PathBuf>,
    /// Up to two prompt files: baseline first, engineered second.
    #[arg(long)]
    pub prompts: Vec<PathBuf>,
    #[command(flatten)]
    pub dad_args: DadArgs,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Output CSV, one row per grid cell.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Export2dCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub dad: bool,
    #[arg(long)]
    pub teo: bool,
    #[command(flatten)]
    pub dad_args: DadArgs,
    /// Output CSV with header x,y,kind,subject_id,class_id.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(cmd) => cmd_synth(&cmd),
        Command::Classify(cmd) => cmd_classify(&cmd),
        Command::Ablate(cmd) => cmd_ablate(&cmd),
        Command::Export2d(cmd) => cmd_export_2d(&cmd),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("--k", "must be at least 1"));
    }
    Ok(())
}

pub fn cmd_synth(cmd: &SynthCmd) -> Result<()> {
    let cfg = cmd.synth.config()?;
    let data = generate(&cfg)?;
    ensure_dir(&cmd.out_dir)?;
    save_dataset(&data.images, cmd.out_dir.join("images.json"))?;
    save_text_matrix(&data.texts, None, cmd.out_dir.join("texts.json"))
}

/// Loaded images and texts, with the image class count widened to the text count.
pub struct Inputs {
    pub images: Dataset,
    pub texts: TextMatrix,
    pub prompts: Option<PromptSet>,
}

pub fn load_inputs(input: &InputArgs) -> Result<Inputs> {
    let images = load_dataset(&input.images)?;
    let sources = load_text_sources(&input.texts)?;
    let prompts = input.prompts.as_ref().map(load_prompts).transpose()?;
    let texts = text_matrix(&sources, prompts.as_ref())?;
    if texts.dim() != images.dim() {
        return Err(Error::invalid(
            "--texts",
            format!("text dimension {} differs from image dimension {}", texts.dim(), images.dim()),
        ));
    }
    let images = images.with_class_count(texts.n_classes()).map_err(|e| Error::invalid("--images", e.to_string()))?;
    Ok(Inputs { images, texts, prompts })
}

pub fn cmd_classify(cmd: &ClassifyCmd) -> Result<()> {
    check_k(cmd.k)?;
    let opts = PipelineOptions { toggles: Toggles { dad: cmd.dad, teo: cmd.teo }, dad: cmd.dad_args.options()? };
    let inputs = load_inputs(&cmd.input)?;
    let (out, report) = run_and_evaluate(&inputs.images, &inputs.texts, &opts, cmd.k, None)?;

    ensure_dir(&cmd.out_dir)?;
    write_atomic(&cmd.out_dir.join("predictions.jsonl"), &predictions_jsonl(&out.rows))?;
    write_atomic(&cmd.out_dir.join("report.json"), &report_json(&report))?;
    if cmd.csv {
        write_atomic(&cmd.out_dir.join("report.csv"), &report_csv(&report))?;
    }
    if cmd.pr_curve {
        let scores: Vec<f64> = out.rows.iter().map(|r| r.distraction_score).collect();
        let labels: Vec<bool> = out.rows.iter().map(|r| r.class_id_true != SAFE_CLASS).collect();
        write_atomic(&cmd.out_dir.join("pr_curve.csv"), &pr_curve_csv(&pr_curve(&scores, &labels)?))?;
    }
    Ok(())
}

pub fn cmd_ablate(cmd: &AblateCmd) -> Result<()> {
    check_k(cmd.k)?;
    let dad = cmd.dad_args.options()?;
    let mut reports = Vec::new();
    if cmd.synthetic {
        let data = generate(&cmd.synth.config()?)?;
        reports.extend(ablation_grid(&data.images, &data.texts, dad, cmd.k, None)?.into_iter().map(|c| c.report));
    } else {
        let images = cmd.images.as_ref().ok_or_else(|| Error::invalid("--images", "required unless --synthetic"))?;
        if cmd.texts.is_empty() {
            return Err(Error::invalid("--texts", "required unless --synthetic"));
        }
        if cmd.prompts.len() > 2 {
            return Err(Error::invalid("--prompts", "at most two files (baseline, engineered)"));
        }
        let prompt_runs: Vec<(Option<&PathBuf>, Option<bool>)> = match cmd.prompts.as_slice() {
            [] => vec![(None, None)],
            [one] => vec![(Some(one), None)],
            [base, engineered] => vec![(Some(base), Some(false)), (Some(engineered), Some(true))],
            _ => unreachable!(),
        };
        for (prompts, pe) in prompt_runs {
            let input = InputArgs { images: images.clone(), texts: cmd.texts.clone(), prompts: prompts.cloned() };
            let inputs = load_inputs(&input)?;
            reports.extend(ablation_grid(&inputs.images, &inputs.texts, dad, cmd.k, pe)?.into_iter().map(|c| c.report));
        }
    }
    if let Some(dir) = cmd.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_atomic(&cmd.out, &ablation_csv(&reports))
}

pub fn cmd_export_2d(cmd: &Export2dCmd) -> Result<()> {
    let opts = PipelineOptions { toggles: Toggles { dad: cmd.dad, teo: cmd.teo }, dad: cmd.dad_args.options()? };
    let inputs = load_inputs(&cmd.input)?;
    let (images, texts, _) = transform(&inputs.images, &inputs.texts, &opts)?;
    let points = export_2d(&images, &texts)?;
    if let Some(dir) = cmd.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_atomic(&cmd.out, &points_csv(&points))
}
