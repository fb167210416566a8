//! Driver appearance decoupling: each image embedding minus the mean embedding
//! of its subject.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, ImageRows};
use crate::linalg::{norm, normalize_in_place};
use crate::{Error, Result, EPS_ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DadOptions {
    /// Unit-L2 normalize stored embeddings before averaging and subtracting.
    pub pre_normalize: bool,
    /// Fraction of each subject's records (in dataset order) used to estimate its mean.
    pub calibration_fraction: f64,
}

impl Default for DadOptions {
    fn default() -> Self {
        Self { pre_normalize: false, calibration_fraction: 1.0 }
    }
}

impl DadOptions {
    pub fn validate(&self) -> Result<()> {
        let f = self.calibration_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidConfig("calibration_fraction must lie in (0, 1]".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectMean {
    pub mean: Vec<f64>,
    /// Number of records averaged.
    pub count: usize,
}

/// Mean embedding per subject id.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectMeans {
    dim: usize,
    by_subject: BTreeMap<String, SubjectMean>,
}

impl SubjectMeans {
    pub fn get(&self, subject_id: &str) -> Option<&SubjectMean> {
        self.by_subject.get(subject_id)
    }

    pub fn len(&self) -> usize {
        self.by_subject.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_subject.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SubjectMean)> {
        self.by_subject.iter().map(|(k, v)| (k.as_str(), v))
    }
}

fn load_row(ds: &Dataset, i: usize, pre_normalize: bool, out: &mut [f64]) {
    ds.row_into(i, out);
    if pre_normalize {
        normalize_in_place(out, EPS_ZERO);
    }
}

/// Per-subject mean over all of each subject's records.
pub fn compute_subject_means(ds: &Dataset) -> SubjectMeans {
    // default options always validate
    compute_subject_means_with(ds, &DadOptions::default()).expect("default options are valid")
}

pub fn compute_subject_means_with(ds: &Dataset, opts: &DadOptions) -> Result<SubjectMeans> {
    opts.validate()?;
    let dim = ds.dim();

    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for r in ds.records() {
        *totals.entry(&r.subject_id).or_default() += 1;
    }
    let quota = |n: usize| -> usize {
        let q = libm::ceil(opts.calibration_fraction * n as f64) as usize;
        q.clamp(1, n)
    };

    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    let mut row = vec![0.0; dim];
    for (i, r) in ds.records().iter().enumerate() {
        let (sum, used) = sums.entry(&r.subject_id).or_insert_with(|| (vec![0.0; dim], 0));
        if *used >= quota(totals[r.subject_id.as_str()]) {
            continue;
        }
        load_row(ds, i, opts.pre_normalize, &mut row);
        sum.iter_mut().zip(&row).for_each(|(s, x)| *s += x);
        *used += 1;
    }

    let by_subject = sums
        .into_iter()
        .map(|(s, (mut sum, count))| {
            sum.iter_mut().for_each(|x| *x /= count as f64);
            (s.to_string(), SubjectMean { mean: sum, count })
        })
        .collect();
    Ok(SubjectMeans { dim, by_subject })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledRecord {
    pub subject_id: String,
    pub sample_id: String,
    pub class_id: usize,
    pub vector: Vec<f64>,
    /// The subtraction left a (near) zero vector, so the input was kept.
    pub fallback_used: bool,
}

/// Image embeddings after (optional) decoupling, in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledDataset {
    dim: usize,
    records: Vec<DecoupledRecord>,
}

impl DecoupledDataset {
    /// The input embeddings unchanged apart from optional unit normalization.
    pub fn passthrough(ds: &Dataset, pre_normalize: bool) -> Self {
        let records = ds
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut vector = vec![0.0; ds.dim()];
                load_row(ds, i, pre_normalize, &mut vector);
                DecoupledRecord {
                    subject_id: r.subject_id.clone(),
                    sample_id: r.sample_id.clone(),
                    class_id: r.class_id,
                    vector,
                    fallback_used: false,
                }
            })
            .collect();
        Self { dim: ds.dim(), records }
    }

    pub fn records(&self) -> &[DecoupledRecord] {
        &self.records
    }

    pub fn fallback_count(&self) -> usize {
        self.records.iter().filter(|r| r.fallback_used).count()
    }
}

impl ImageRows for DecoupledDataset {
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
        out.copy_from_slice(&self.records[i].vector);
    }
    fn fallback_used(&self, i: usize) -> bool {
        self.records[i].fallback_used
    }
}

/// Subtracts each record's subject mean. When the difference has norm below
/// [`EPS_ZERO`] (e.g. a singleton subject) the input vector is kept and the
/// record is flagged.
pub fn apply_dad(ds: &Dataset, means: &SubjectMeans) -> Result<DecoupledDataset> {
    apply_dad_with(ds, means, &DadOptions::default())
}

/// As [`apply_dad`]; `opts.pre_normalize` must match the one used for `means`.
pub fn apply_dad_with(ds: &Dataset, means: &SubjectMeans, opts: &DadOptions) -> Result<DecoupledDataset> {
    if means.dim() != ds.dim() {
        return Err(Error::DimensionMismatch { expected: ds.dim(), found: means.dim() });
    }
    let mut out = DecoupledDataset::passthrough(ds, opts.pre_normalize);
    for rec in &mut out.records {
        let mean = &means.get(&rec.subject_id).ok_or_else(|| Error::MissingSubject(rec.subject_id.clone()))?.mean;
        let diff: Vec<f64> = rec.vector.iter().zip(mean).map(|(x, m)| x - m).collect();
        if norm(&diff) < EPS_ZERO {
            rec.fallback_used = true;
        } else {
            rec.vector = diff;
        }
    }
    Ok(out)
}
