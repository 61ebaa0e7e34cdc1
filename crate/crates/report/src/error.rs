//! Error type for artifact loading and rendering.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, ReportError>;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Core(#[from] venation_core::Error),

    #[error("run directory {0} is missing required artifact {1}")]
    MissingArtifact(PathBuf, String),

    #[error("run {run_id}: artifacts disagree on {what}")]
    Inconsistent { run_id: String, what: String },

    #[error("no usable font found; install DejaVu Sans or point VENATION_FONT at a .ttf file")]
    FontUnavailable,

    #[error("drawing failed: {0}")]
    Draw(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl ReportError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        ReportError::Io {
            context: context.into(),
            source,
        }
    }
}
