//! Classifier construction and training for the venation pipeline.
//!
//! Builds the three supported backbones (ResNet50, MobileNetV2,
//! EfficientNetB0) as unit-indexed parameter graphs on the candle CPU
//! runtime, attaches the transfer-learning head, and executes phased
//! training plans with early stopping, plateau LR reduction and
//! best-weight restoration. Pretrained weights load from safetensors files
//! using torchvision parameter names; checkpoints round-trip through the
//! same format.

pub mod backbone;
pub mod data;
pub mod error;
pub mod head;
pub mod layers;
pub mod model;
pub mod optim;
pub mod params;
pub mod train;

pub use data::{InputMode, LoadedSplit, VenationSource};
pub use error::{NnError, Result};
pub use model::{ModelHandle, WeightsSource};
pub use train::{evaluate_split_data, execute_plan, run_phase, PlanOutputs};
