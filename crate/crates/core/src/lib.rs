//! Core building blocks for the leaf venation classification pipeline:
//! dataset scanning and stratified splitting, the venation enhancement
//! kernels, per-backbone input normalization, and a multi-class evaluation
//! engine (confusion matrices, per-class scores, one-vs-rest ROC/PR curves).
//!
//! Everything in this crate is pure and deterministic. Floating-point
//! routines are generic over the scalar type via [`num_traits::Float`];
//! the concrete aliases below pin the precision used by the rest of the
//! workspace.

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod predictions;
pub mod preprocess;
pub mod raster;
pub mod train;

pub use error::{Error, Result};

/// Scalar used for all persisted metrics and curve computations.
pub type Scalar = f64;

/// Scalar used for model inputs (what the tensor runtime consumes).
pub type InputScalar = f32;

/// Normalized image tensor fed to a classifier.
pub type ModelInput = preprocess::FloatTensor<InputScalar>;

/// Evaluation curve at workspace precision.
pub type Curve = metrics::Curve<Scalar>;
