use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset has no records")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in record {record} at coordinate {coord}")]
    NonFinite { record: usize, coord: usize },
    #[error("duplicate record (subject_id={subject_id:?}, sample_id={sample_id:?})")]
    DuplicateRecord { subject_id: String, sample_id: String },
    #[error("class id {class_id} out of range for {class_count} classes")]
    ClassOutOfRange { class_id: usize, class_count: usize },
    #[error("prompt template must contain exactly one `{{}}` placeholder")]
    BadTemplate,
    #[error("at least 2 classes are required, found {0}")]
    TooFewClasses(usize),
    #[error("embedding dimension {dim} is smaller than the class count {classes}")]
    DimTooSmall { dim: usize, classes: usize },
    #[error("text matrix is rank deficient: sigma_min/sigma_max = {ratio:e} is below {tolerance:e}")]
    RankDeficient { ratio: f64, tolerance: f64 },
    #[error("subject {0:?} has no mean")]
    MissingSubject(String),
    #[error("missing embedding for class {0}")]
    MissingClass(usize),
    #[error("vector norm is below the zero threshold")]
    ZeroNorm,
    #[error("no positive labels")]
    NoPositives,
    #[error("no truly distracted rows")]
    NoDistracted,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
