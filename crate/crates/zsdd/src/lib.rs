//! File formats, report writers and the command-line driver around `zsdd-core`.
//!
//! Embeddings travel as a JSON manifest plus a raw little-endian `f32`
//! payload ([`store`]); predictions, reports and plots are written by
//! [`output`]; [`cli`] wires everything into the `zsdd` binary.

pub mod cli;
mod error;
pub mod output;
pub mod store;

pub use error::{Error, Result};
pub use zsdd_core as core;
