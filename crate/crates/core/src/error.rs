//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // -- dataset --
    #[error("dataset root does not exist or is not a directory: {0}")]
    MissingRoot(PathBuf),
    #[error("dataset root must contain at least 2 class directories, found {0}")]
    TooFewClasses(usize),
    #[error("class directory contains no decodable image: {0}")]
    EmptyClass(String),
    #[error("class {class:?} has {total} images; cannot assign at least one train and one test item at test fraction {fraction}")]
    ClassTooSmall {
        class: String,
        total: usize,
        fraction: f64,
    },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidTestFraction(f64),
    #[error("manifest records already carry split assignments")]
    SplitAlreadyAssigned,
    #[error("manifest has no split assignments")]
    SplitUnassigned,
    #[error("class index {index} out of range for {classes} classes")]
    ClassIndexOutOfRange { index: usize, classes: usize },
    #[error("failed to decode image {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    // -- image / preprocessing --
    #[error("expected a {expected}-channel image, got {actual} channels")]
    ChannelMismatch { expected: usize, actual: usize },
    #[error("median kernel must be an odd integer >= 3, got {0}")]
    InvalidKernel(usize),
    #[error("image {height}x{width} is smaller than the {kernel}x{kernel} kernel")]
    ImageTooSmall {
        height: usize,
        width: usize,
        kernel: usize,
    },
    #[error("gradient fields have mismatched shapes: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("pixel buffer length {len} does not match {height}x{width}x{channels}")]
    BufferLength {
        len: usize,
        height: usize,
        width: usize,
        channels: usize,
    },

    // -- metrics --
    #[error("score matrix is empty")]
    EmptyScores,
    #[error("score rows must all have width {expected}, row {row} has {actual}")]
    RaggedScores {
        expected: usize,
        actual: usize,
        row: usize,
    },
    #[error("label {label} at row {row} out of range for {classes} classes")]
    LabelOutOfRange {
        label: usize,
        row: usize,
        classes: usize,
    },
    #[error("ROC is undefined for class {class:?}: {reason}")]
    DegenerateRoc { class: String, reason: String },
    #[error("PR is undefined for class {class:?}: no positive instance")]
    DegeneratePr { class: String },
    #[error("cannot average an empty curve list")]
    NoCurves,
    #[error("curve kinds are mixed; expected all {0:?}")]
    MixedCurveKinds(crate::metrics::CurveKind),

    // -- configuration --
    #[error("class count must be >= 2, got {0}")]
    TooFewOutputs(usize),
    #[error("invalid training plan: {0}")]
    InvalidPlan(String),
    #[error("invalid head spec: {0}")]
    InvalidHead(String),

    // -- persistence --
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
    #[error("malformed predictions file: {0}")]
    MalformedPredictions(String),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            context: context.into(),
            source,
        }
    }
}
