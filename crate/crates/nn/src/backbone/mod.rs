//! Backbone feature extractors assembled from parameterized units.
//!
//! A backbone is a sequence of stages (stem, residual/MBConv blocks, top
//! convolution). Stages report the unit range they own, which lets the
//! trainer cache activations at the deepest all-frozen stage boundary and
//! run only the trainable suffix inside the training graph.

mod efficientnet;
mod mobilenet;
mod resnet;

use candle_core::Tensor;
use venation_core::model::ArchitectureId;

use crate::error::Result;
use crate::params::ParamStore;

pub trait Stage: Send + Sync {
    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor>;
    /// Units owned by this stage: a contiguous `start..end` range.
    fn units(&self) -> std::ops::Range<usize>;
}

pub struct Backbone {
    arch: ArchitectureId,
    stages: Vec<Box<dyn Stage>>,
    unit_count: usize,
    feature_dim: usize,
}

impl Backbone {
    pub fn build(arch: ArchitectureId, store: &mut ParamStore) -> Result<Self> {
        let stages = match arch {
            ArchitectureId::Resnet50 => resnet::build(store)?,
            ArchitectureId::MobilenetV2 => mobilenet::build(store)?,
            ArchitectureId::EfficientnetB0 => efficientnet::build(store)?,
        };
        let unit_count = store.unit_count();
        debug_assert_eq!(
            stages.last().map(|s| s.units().end),
            Some(unit_count),
            "stages must cover all backbone units"
        );
        Ok(Self {
            arch,
            stages,
            unit_count,
            feature_dim: arch.feature_dim(),
        })
    }

    pub fn arch(&self) -> ArchitectureId {
        self.arch
    }

    pub fn unit_count(&self) -> usize {
        self.unit_count
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Index of the first stage containing a trainable unit, i.e. the cache
    /// boundary: stages before it are fully frozen.
    pub fn first_trainable_stage(&self, trainable_from: usize) -> usize {
        self.stages
            .iter()
            .position(|s| s.units().end > trainable_from)
            .unwrap_or(self.stages.len())
    }

    /// Run stages `range` over `x` (NCHW).
    pub fn forward_stages(
        &self,
        x: &Tensor,
        range: std::ops::Range<usize>,
        trainable_from: usize,
    ) -> Result<Tensor> {
        let mut out = x.clone();
        for stage in &self.stages[range] {
            out = stage.forward(&out, trainable_from)?;
        }
        Ok(out)
    }

    /// Full feature map: (B, 3, H, W) -> (B, C, H', W').
    pub fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        self.forward_stages(x, 0..self.stages.len(), trainable_from)
    }
}
