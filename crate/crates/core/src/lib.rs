//! Zero-shot distracted-driver detection in a joint image/text embedding space.
//!
//! The crate works on cached embeddings only. It provides:
//! - driver appearance decoupling: per-subject mean subtraction on image embeddings ([`decouple`]),
//! - text embedding orthogonalization: nearest orthonormal frame to the class text matrix ([`teo`]),
//! - cosine argmax classification with a binary safe/distracted mapping ([`classify`]),
//! - the evaluation suite: Top-k, macro precision/recall, PR curve, AUPRC, FNR ([`metrics`]),
//! - a seeded synthetic generator with a controllable subject confound ([`synth`]),
//! - a 2-D PCA export of the joint geometry ([`pca`]).
//!
//! `no_std` with `alloc`. File formats and the command-line driver live in the `zsdd` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod classify;
pub mod dataset;
pub mod decouple;
mod error;
pub mod linalg;
pub mod metrics;
pub mod pca;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod teo;

pub use classify::{binary_decision, classify, cosine, PredictionRow};
pub use dataset::{Dataset, EmbeddingRecord, ImageRows, PromptSet, TextMatrix};
pub use decouple::{apply_dad, compute_subject_means, DecoupledDataset, SubjectMeans};
pub use error::Error;
pub use metrics::{evaluate, MetricsReport};
pub use pipeline::{run_pipeline, Toggles};
pub use teo::{teo_project, OrthoTextMatrix};

/// Norm below which a vector is treated as zero.
pub const EPS_ZERO: f64 = 1e-9;

pub type Result<T, E = Error> = core::result::Result<T, E>;
