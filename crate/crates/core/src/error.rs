use std::path::PathBuf;

use thiserror::Error;

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input data.
    Data,
    /// A numerical routine could not produce a trustworthy result.
    Numerical,
    /// Filesystem failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // manifest
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("line {line}: label column `{column}` has non-binary value `{value}`")]
    BadLabelValue {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: {message}")]
    BadRecord { line: u64, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    // embeddings
    #[error("bad magic bytes {0:?}, expected \"CXGB\"")]
    BadMagic([u8; 4]),
    #[error("unsupported CXGB version {0}")]
    VersionUnsupported(u32),
    #[error("file truncated while reading {0}")]
    TruncatedFile(&'static str),
    #[error("header declares {expected} ids but found {found}")]
    IdCountMismatch { expected: usize, found: usize },
    #[error("sample id is not valid UTF-8 at row {0}")]
    BadIdEncoding(usize),
    #[error("sample id at row {0} exceeds 65535 bytes")]
    IdTooLong(usize),
    #[error("value at row {row}, column {col} is not finite")]
    NonFiniteInput { row: usize, col: usize },

    // images
    #[error("could not decode image: {0}")]
    DecodeFailure(String),
    #[error("image has a zero dimension")]
    ZeroDimension,
    #[error("image shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    // numerics
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix square root failed: eigenvalue {eigenvalue} below tolerance {tolerance}")]
    SqrtFailure { eigenvalue: f64, tolerance: f64 },
    #[error("subset size {subset} exceeds available samples {available}")]
    SubsetTooLarge { subset: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need more than k={k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("empty input")]
    EmptyInput,
    #[error("sample id `{0}` not present in embedding matrix")]
    IdAlignment(String),
    #[error("non-finite value at position {0}")]
    NonFiniteValue(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("value out of range: {0}")]
    OutOfRange(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::SqrtFailure { .. } | Error::ZeroVariance | Error::ZeroVector => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Data,
        }
    }
}
