//! The opaque trainable model: backbone + head over a shared parameter
//! store, with unit-level trainability control and checkpointing.

use std::path::{Path, PathBuf};

use candle_core::{Device, Tensor, D};
use rand_chacha::ChaCha20Rng;
use venation_core::model::{ArchitectureId, ModelConfig};

use crate::backbone::Backbone;
use crate::error::{NnError, Result};
use crate::head::Head;
use crate::layers::global_average_pool;
use crate::params::ParamStore;

/// Where backbone parameters come from.
#[derive(Debug, Clone)]
pub enum WeightsSource {
    /// Seeded random initialization (no pretrained weights).
    Random,
    /// A safetensors file: pretrained backbone export or a full checkpoint.
    File(PathBuf),
}

impl WeightsSource {
    /// Resolve the source for a backbone spec: pretrained models need
    /// `<weights_dir>/<arch>.safetensors` to exist.
    pub fn resolve(
        arch: ArchitectureId,
        pretrained: bool,
        weights_dir: Option<&Path>,
    ) -> Result<WeightsSource> {
        if !pretrained {
            return Ok(WeightsSource::Random);
        }
        let dir = weights_dir.ok_or_else(|| NnError::WeightsSourceMissing {
            arch: arch.to_string(),
        })?;
        let path = dir.join(format!("{arch}.safetensors"));
        if !path.is_file() {
            return Err(NnError::WeightsUnavailable {
                arch: arch.to_string(),
                path,
            });
        }
        Ok(WeightsSource::File(path))
    }
}

pub struct ModelHandle {
    config: ModelConfig,
    store: ParamStore,
    backbone: Backbone,
    head: Head,
    /// First trainable backbone unit; `unit_count` means head-only.
    trainable_from: usize,
    seed: u64,
}

impl ModelHandle {
    /// Build a classifier from its configuration. The head (and, without a
    /// weights file, the backbone) is randomly initialized from `seed`.
    pub fn build(config: &ModelConfig, seed: u64, weights: WeightsSource) -> Result<Self> {
        config.validate()?;
        let device = Device::Cpu;
        let mut store = match &weights {
            WeightsSource::Random => {
                if config.backbone.pretrained {
                    return Err(NnError::WeightsSourceMissing {
                        arch: config.backbone.architecture.to_string(),
                    });
                }
                ParamStore::new(device, seed)
            }
            WeightsSource::File(path) => ParamStore::with_weights_file(device, seed, path)?,
        };
        let backbone = Backbone::build(config.backbone.architecture, &mut store)?;
        let head = Head::build(&mut store, &config.head, backbone.feature_dim())?;
        let trainable_from = backbone.unit_count();
        Ok(Self {
            config: config.clone(),
            store,
            backbone,
            head,
            trainable_from,
            seed,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn backbone(&self) -> &Backbone {
        &self.backbone
    }

    pub fn device(&self) -> &Device {
        self.store.device()
    }

    pub fn classes(&self) -> usize {
        self.config.head.output_units
    }

    /// Make exactly the last `n` backbone units (plus the always-trainable
    /// head) trainable.
    pub fn set_trainable_suffix(&mut self, n: usize) -> Result<()> {
        let available = self.backbone.unit_count();
        if n > available {
            return Err(NnError::SuffixOutOfRange {
                requested: n,
                available,
            });
        }
        self.trainable_from = available - n;
        Ok(())
    }

    /// First trainable backbone unit index (== unit count when frozen).
    pub fn trainable_from(&self) -> usize {
        self.trainable_from
    }

    /// Vars the optimizer may update: trainable backbone suffix + head.
    pub fn trainable_vars(&self) -> Vec<candle_core::Var> {
        self.store
            .vars_in_units(self.trainable_from..self.store.unit_count())
    }

    /// Names of trainable parameters, for tests and diagnostics.
    pub fn trainable_param_names(&self) -> Vec<String> {
        self.store.units[self.trainable_from..]
            .iter()
            .flat_map(|u| u.params.iter().map(|&i| self.store.params[i].0.clone()))
            .collect()
    }

    pub fn trainable_param_count(&self) -> Result<usize> {
        Ok(self
            .trainable_vars()
            .iter()
            .map(|v| v.as_tensor().elem_count())
            .sum())
    }

    /// Checksum over the currently frozen backbone parameters.
    pub fn frozen_checksum(&self) -> Result<String> {
        self.store.checksum_units(0..self.trainable_from)
    }

    /// Checksum over every parameter (backbone + head).
    pub fn full_checksum(&self) -> Result<String> {
        self.store.checksum_units(0..self.store.unit_count())
    }

    /// Pooled features for a normalized batch: (B, 3, H, W) -> (B, D).
    pub fn pooled_features(&self, batch: &Tensor) -> Result<Tensor> {
        let features = self.backbone.forward(batch, self.trainable_from)?;
        global_average_pool(&features)
    }

    /// Eval-mode forward: batch (B, 3, H, W) -> row-stochastic (B, K).
    pub fn predict_probs(&self, batch: &Tensor) -> Result<Tensor> {
        let pooled = self.pooled_features(batch)?;
        let logits = self.head.forward(&pooled, self.trainable_from, None)?;
        Ok(candle_nn::ops::softmax(&logits, D::Minus1)?)
    }

    /// Training/eval forward from a cached stage boundary.
    ///
    /// `cached` is the output of stages `0..from_stage`; when `from_stage`
    /// equals the stage count the cache already holds pooled features.
    pub(crate) fn forward_from_cache(
        &self,
        cached: &Tensor,
        from_stage: usize,
        dropout_rng: Option<&mut ChaCha20Rng>,
    ) -> Result<Tensor> {
        let pooled = if from_stage >= self.backbone.stage_count() {
            cached.clone()
        } else {
            let features = self.backbone.forward_stages(
                cached,
                from_stage..self.backbone.stage_count(),
                self.trainable_from,
            )?;
            global_average_pool(&features)?
        };
        self.head.forward(&pooled, self.trainable_from, dropout_rng)
    }

    /// Run the frozen prefix `0..to_stage` (no gradients), producing cache
    /// activations; `to_stage == stage_count` yields pooled features.
    pub(crate) fn forward_prefix(&self, batch: &Tensor, to_stage: usize) -> Result<Tensor> {
        let out = self
            .backbone
            .forward_stages(batch, 0..to_stage, usize::MAX)?;
        if to_stage >= self.backbone.stage_count() {
            Ok(global_average_pool(&out)?.detach())
        } else {
            Ok(out.detach())
        }
    }

    /// Persist every parameter and buffer as safetensors.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        candle_core::safetensors::save(&self.store.state_dict(), path).map_err(|e| {
            NnError::Checkpoint {
                path: path.to_path_buf(),
                reason: e.to_string(),
            }
        })
    }

    /// Rebuild a handle from a checkpoint written by `save_checkpoint`.
    pub fn load_checkpoint(config: &ModelConfig, seed: u64, path: &Path) -> Result<Self> {
        Self::build(config, seed, WeightsSource::File(path.to_path_buf()))
    }
}
