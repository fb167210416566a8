//! On-disk interchange format.
//!
//! A dataset is a JSON manifest
//!
//! ```json
//! {"format_version":1, "dim":2, "count":1, "payload":"images.f32", "dtype":"f32le",
//!  "records":[{"subject_id":"A","sample_id":"0","class_id":0}]}
//! ```
//!
//! next to a payload of `count * dim` little-endian `f32` values, row-major,
//! no header and no padding. Row `k` belongs to manifest record `k`. The payload
//! path is relative to the manifest's directory.
//!
//! Text embeddings use the same format: `class_id` is the class index and
//! `sample_id` the rendered prompt the vector embeds.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zsdd_core::dataset::{embed_prompts, StoredTextEncoder};
use zsdd_core::{Dataset, EmbeddingRecord, PromptSet, TextMatrix};

use crate::output::write_atomic;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE: &str = "f32le";
/// `subject_id` used for text embedding records.
pub const TEXT_SUBJECT: &str = "text";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub dim: usize,
    pub count: usize,
    pub payload: String,
    pub dtype: String,
    pub records: Vec<ManifestRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub subject_id: String,
    pub sample_id: String,
    pub class_id: usize,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn payload_len(path: &Path, count: usize, dim: usize) -> Result<usize> {
    count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(path, format!("count {count} x dim {dim} overflows the payload size")))
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let bytes = read(manifest_path)?;
    let m: Manifest = serde_json::from_slice(&bytes).map_err(|e| Error::Json { path: manifest_path.into(), source: e })?;
    if m.format_version != FORMAT_VERSION {
        return Err(Error::format(manifest_path, format!("unsupported format_version {}", m.format_version)));
    }
    if m.dtype != DTYPE {
        return Err(Error::format(manifest_path, format!("unsupported dtype {:?}", m.dtype)));
    }
    if m.count != m.records.len() {
        return Err(Error::format(
            manifest_path,
            format!("count is {} but {} records are listed", m.count, m.records.len()),
        ));
    }
    let payload_path = payload_path(manifest_path, &m.payload);
    let payload = read(&payload_path)?;
    let expected = payload_len(manifest_path, m.count, m.dim)?;
    if payload.len() != expected {
        return Err(Error::format(
            &payload_path,
            format!("payload has {} bytes, expected count x dim x 4 = {expected}", payload.len()),
        ));
    }

    let rows = payload.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect::<Vec<_>>();
    let records = m
        .records
        .into_iter()
        .zip(rows.chunks_exact(m.dim.max(1)))
        .map(|(r, v)| EmbeddingRecord { subject_id: r.subject_id, sample_id: r.sample_id, class_id: r.class_id, vector: v.to_vec() })
        .collect();
    Dataset::new(m.dim, records).map_err(|e| Error::format(manifest_path, e.to_string()))
}

fn payload_path(manifest_path: &Path, payload: &str) -> PathBuf {
    manifest_path.parent().unwrap_or_else(|| Path::new("")).join(payload)
}

/// Payload file name paired with a manifest: the manifest stem plus `.f32`.
pub fn payload_name(manifest_path: &Path) -> String {
    let stem = manifest_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "embeddings".into());
    format!("{stem}.f32")
}

/// Writes the payload, then the manifest, each atomically.
pub fn save_dataset(ds: &Dataset, manifest_path: impl AsRef<Path>) -> Result<()> {
    let manifest_path = manifest_path.as_ref();
    let payload = payload_name(manifest_path);
    payload_len(manifest_path, ds.len(), ds.dim())?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        dim: ds.dim(),
        count: ds.len(),
        payload: payload.clone(),
        dtype: DTYPE.into(),
        records: ds
            .records()
            .iter()
            .map(|r| ManifestRecord { subject_id: r.subject_id.clone(), sample_id: r.sample_id.clone(), class_id: r.class_id })
            .collect(),
    };
    let bytes: Vec<u8> = ds.records().iter().flat_map(|r| r.vector.iter().flat_map(|x| x.to_le_bytes())).collect();
    write_atomic(&payload_path(manifest_path, &payload), &bytes)?;
    let mut json = serde_json::to_vec(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write_atomic(manifest_path, &json)
}

/// Stores a text matrix as one record per class. `prompts`, when given,
/// supplies the rendered prompt stored as each record's `sample_id`.
pub fn save_text_matrix(t: &TextMatrix, prompts: Option<&PromptSet>, manifest_path: impl AsRef<Path>) -> Result<()> {
    let records = (0..t.n_classes())
        .map(|c| EmbeddingRecord {
            subject_id: TEXT_SUBJECT.into(),
            sample_id: prompts.map(|p| p.render(c)).unwrap_or_else(|| format!("class {c}")),
            class_id: c,
            vector: t.column(c).iter().map(|&x| x as f32).collect(),
        })
        .collect();
    save_dataset(&Dataset::new(t.dim(), records)?, manifest_path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptFile {
    template: String,
    classes: Vec<String>,
}

pub fn load_prompts(path: impl AsRef<Path>) -> Result<PromptSet> {
    let path = path.as_ref();
    let f: PromptFile = serde_json::from_slice(&read(path)?).map_err(|e| Error::Json { path: path.into(), source: e })?;
    PromptSet::new(f.template, f.classes).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_prompts(ps: &PromptSet, path: impl AsRef<Path>) -> Result<()> {
    let f = PromptFile { template: ps.template().into(), classes: ps.class_names().to_vec() };
    let mut json = serde_json::to_vec_pretty(&f).expect("prompt file serializes");
    json.push(b'\n');
    write_atomic(path.as_ref(), &json)
}

/// Builds the class text matrix from stored text embeddings.
///
/// With a prompt set, column `c` is the stored vector whose `sample_id` equals
/// the rendered prompt of class `c`, searched across `sources` in order.
/// Without one, the first source is read by `class_id`.
pub fn text_matrix(sources: &[Dataset], prompts: Option<&PromptSet>) -> Result<TextMatrix> {
    match prompts {
        Some(ps) => {
            let encoder = StoredTextEncoder::new(sources)?;
            embed_prompts(ps, &encoder).map_err(|e| match e {
                zsdd_core::Error::MissingClass(c) => {
                    Error::invalid("--texts", format!("no stored embedding for prompt {:?}", ps.render(c)))
                }
                e => e.into(),
            })
        }
        None => {
            let first = sources.first().ok_or_else(|| Error::invalid("--texts", "at least one file is required"))?;
            Ok(TextMatrix::from_class_rows(first)?)
        }
    }
}

pub fn load_text_sources<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Dataset>> {
    paths.iter().map(load_dataset).collect()
}
