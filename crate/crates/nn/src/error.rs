//! Error type for model construction and training.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, NnError>;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("tensor runtime error: {0}")]
    Candle(#[from] candle_core::Error),

    #[error(transparent)]
    Core(#[from] venation_core::Error),

    #[error(
        "pretrained weights for {arch} not found at {path}. Export them as safetensors with \
         torchvision parameter names (see README), pass --weights-dir, set VENATION_WEIGHTS_DIR, \
         or disable pretrained weights (--no-pretrained)"
    )]
    WeightsUnavailable { arch: String, path: PathBuf },

    #[error("weights file {path} is missing parameter {name} ({shape:?})")]
    MissingWeight {
        path: PathBuf,
        name: String,
        shape: Vec<usize>,
    },

    #[error("weights file {path}: parameter {name} has shape {actual:?}, expected {expected:?}")]
    WeightShape {
        path: PathBuf,
        name: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("pretrained weights requested for {arch} but no weights file was provided; pass --weights-dir/VENATION_WEIGHTS_DIR or disable pretrained weights")]
    WeightsSourceMissing { arch: String },

    #[error("trainable suffix of {requested} exceeds the {available} backbone units")]
    SuffixOutOfRange { requested: usize, available: usize },

    #[error("model outputs {actual} classes but the manifest has {expected}")]
    ClassCountMismatch { expected: usize, actual: usize },

    #[error("non-finite {quantity} at phase {phase:?} epoch {epoch}; aborting the phase")]
    NonFiniteLoss {
        phase: String,
        epoch: usize,
        quantity: String,
    },

    #[error("training data stream is empty")]
    EmptyData,

    #[error("checkpoint write failed at {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
}
