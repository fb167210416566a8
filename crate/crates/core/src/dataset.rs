//! In-memory model of embedding datasets, prompt sets and class text matrices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// One image embedding with its subject, sample and ground-truth class.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub subject_id: String,
    pub sample_id: String,
    /// 0 is the non-distracted (safe driving) class.
    pub class_id: usize,
    /// Encoder output as stored, never normalized here.
    pub vector: Vec<f32>,
}

/// Ordered collection of records sharing one dimension.
///
/// Record order is the canonical row order of the binary payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    records: Vec<EmbeddingRecord>,
    class_count: usize,
}

impl Dataset {
    /// Validates and wraps `records`. The class count is taken as `max(class_id) + 1`.
    pub fn new(dim: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty);
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let mut seen = BTreeSet::new();
        for (k, r) in records.iter().enumerate() {
            if r.vector.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.vector.len() });
            }
            if let Some(coord) = r.vector.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { record: k, coord });
            }
            if !seen.insert((r.subject_id.as_str(), r.sample_id.as_str())) {
                return Err(Error::DuplicateRecord {
                    subject_id: r.subject_id.clone(),
                    sample_id: r.sample_id.clone(),
                });
            }
        }
        let class_count = records.iter().map(|r| r.class_id).max().unwrap_or(0) + 1;
        Ok(Self { dim, records, class_count })
    }

    /// Widens the declared class count, e.g. to that of a prompt set.
    pub fn with_class_count(mut self, class_count: usize) -> Result<Self> {
        if let Some(r) = self.records.iter().find(|r| r.class_id >= class_count) {
            return Err(Error::ClassOutOfRange { class_id: r.class_id, class_count });
        }
        self.class_count = class_count;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn truths(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.class_id).collect()
    }

    pub fn subject_count(&self) -> usize {
        self.records.iter().map(|r| r.subject_id.as_str()).collect::<BTreeSet<_>>().len()
    }

    pub fn into_records(self) -> Vec<EmbeddingRecord> {
        self.records
    }
}

/// Read access to a set of image embeddings, raw or decoupled.
pub trait ImageRows {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn subject_id(&self, i: usize) -> &str;
    fn sample_id(&self, i: usize) -> &str;
    fn class_id(&self, i: usize) -> usize;
    /// Copies row `i` into `out` in double precision.
    fn row_into(&self, i: usize, out: &mut [f64]);
    fn fallback_used(&self, _i: usize) -> bool {
        false
    }
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ImageRows for Dataset {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.records.len()
    }
    fn subject_id(&self, i: usize) -> &str {
        &self.records[i].subject_id
    }
    fn sample_id(&self, i: usize) -> &str {
        &self.records[i].sample_id
    }
    fn class_id(&self, i: usize) -> usize {
        self.records[i].class_id
    }
    fn row_into(&self, i: usize, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(&self.records[i].vector) {
            *o = f64::from(x);
        }
    }
}

/// Class names plus a template with a single `{}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PromptSet {
    template: String,
    class_names: Vec<String>,
}

impl PromptSet {
    pub const PLACEHOLDER: &'static str = "{}";

    pub fn new(template: impl Into<String>, class_names: Vec<String>) -> Result<Self> {
        let template = template.into();
        if template.matches(Self::PLACEHOLDER).count() != 1 {
            return Err(Error::BadTemplate);
        }
        if class_names.len() < 2 {
            return Err(Error::TooFewClasses(class_names.len()));
        }
        Ok(Self { template, class_names })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_names.is_empty()
    }

    pub fn render(&self, class_id: usize) -> String {
        self.template.replacen(Self::PLACEHOLDER, &self.class_names[class_id], 1)
    }

    pub fn rendered(&self) -> Vec<String> {
        (0..self.len()).map(|c| self.render(c)).collect()
    }
}

/// `d x |C|` matrix whose column `c` is the text embedding of class `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextMatrix {
    matrix: Matrix,
}

impl TextMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.cols() < 2 {
            return Err(Error::TooFewClasses(matrix.cols()));
        }
        if matrix.rows() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some(pos) = matrix.as_col_major().iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { record: pos / matrix.rows(), coord: pos % matrix.rows() });
        }
        Ok(Self { matrix })
    }

    pub fn from_columns<C: AsRef<[f64]>>(dim: usize, columns: &[C]) -> Result<Self> {
        if let Some(c) = columns.iter().find(|c| c.as_ref().len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: c.as_ref().len() });
        }
        Self::new(Matrix::from_columns(dim, columns))
    }

    /// Column `c` = the vector of the record whose `class_id` is `c`. Every class
    /// in `0..max+1` must appear exactly once.
    pub fn from_class_rows(ds: &Dataset) -> Result<Self> {
        let n = ds.class_count();
        let mut slots: Vec<Option<&EmbeddingRecord>> = alloc::vec![None; n];
        for r in ds.records() {
            if slots[r.class_id].replace(r).is_some() {
                return Err(Error::DuplicateRecord {
                    subject_id: r.subject_id.clone(),
                    sample_id: r.sample_id.clone(),
                });
            }
        }
        let mut columns = Vec::with_capacity(n);
        for (c, slot) in slots.iter().enumerate() {
            let r = slot.ok_or(Error::MissingClass(c))?;
            columns.push(r.vector.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>());
        }
        Self::from_columns(ds.dim(), &columns)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column(&self, c: usize) -> &[f64] {
        self.matrix.col(c)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Reorders columns: output column `k` is input column `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let cols: Vec<&[f64]> = order.iter().map(|&c| self.column(c)).collect();
        Self { matrix: Matrix::from_columns(self.dim(), &cols) }
    }
}

/// Source of text embeddings for rendered prompts.
pub trait TextEncoder {
    fn dim(&self) -> usize;
    fn embed(&self, prompt: &str) -> Option<Vec<f64>>;
}

/// Text encoder backed by stored embeddings: a record's `sample_id` is the
/// rendered prompt it embeds. Earlier datasets take precedence.
pub struct StoredTextEncoder<'a> {
    dim: usize,
    by_prompt: BTreeMap<&'a str, &'a [f32]>,
}

impl<'a> StoredTextEncoder<'a> {
    pub fn new(sources: &'a [Dataset]) -> Result<Self> {
        let dim = sources.first().ok_or(Error::Empty)?.dim();
        let mut by_prompt = BTreeMap::new();
        for ds in sources {
            if ds.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: ds.dim() });
            }
            for r in ds.records() {
                by_prompt.entry(r.sample_id.as_str()).or_insert(r.vector.as_slice());
            }
        }
        Ok(Self { dim, by_prompt })
    }
}

impl TextEncoder for StoredTextEncoder<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, prompt: &str) -> Option<Vec<f64>> {
        self.by_prompt.get(prompt).map(|v| v.iter().map(|&x| f64::from(x)).collect())
    }
}

/// Builds the class text matrix: column `c` embeds the rendered prompt of class `c`.
pub fn embed_prompts(prompts: &PromptSet, encoder: &impl TextEncoder) -> Result<TextMatrix> {
    let dim = encoder.dim();
    let mut columns = Vec::with_capacity(prompts.len());
    for c in 0..prompts.len() {
        let v = encoder.embed(&prompts.render(c)).ok_or(Error::MissingClass(c))?;
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        columns.push(v);
    }
    TextMatrix::from_columns(dim, &columns)
}
