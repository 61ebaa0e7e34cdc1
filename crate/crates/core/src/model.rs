//! Classifier configurations: backbone identity, classification head,
//! normalization scheme, and the phased training plan for each of the
//! three supported models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::NormalizationScheme;
use crate::train::{EarlyStopSpec, OptimizerId, Phase, PlateauSpec, TrainPlan};

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_ADAM_LR: f64 = 1e-3;
pub const DEFAULT_FINE_TUNE_LR: f64 = 1e-4;
pub const DEFAULT_FINE_TUNE_MOMENTUM: f64 = 0.9;
/// Backbone units unfrozen for the fine-tuning phase.
pub const FINE_TUNE_UNFROZEN_UNITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureId {
    Resnet50,
    MobilenetV2,
    EfficientnetB0,
}

impl ArchitectureId {
    pub const ALL: [ArchitectureId; 3] = [
        ArchitectureId::Resnet50,
        ArchitectureId::MobilenetV2,
        ArchitectureId::EfficientnetB0,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArchitectureId::Resnet50 => "resnet50",
            ArchitectureId::MobilenetV2 => "mobilenet_v2",
            ArchitectureId::EfficientnetB0 => "efficientnet_b0",
        }
    }

    /// Width of the pooled feature vector the head consumes.
    pub fn feature_dim(&self) -> usize {
        match self {
            ArchitectureId::Resnet50 => 2048,
            ArchitectureId::MobilenetV2 => 1280,
            ArchitectureId::EfficientnetB0 => 1280,
        }
    }
}

impl std::fmt::Display for ArchitectureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ArchitectureId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "resnet50" => Ok(ArchitectureId::Resnet50),
            "mobilenet_v2" => Ok(ArchitectureId::MobilenetV2),
            "efficientnet_b0" => Ok(ArchitectureId::EfficientnetB0),
            other => Err(format!(
                "unknown architecture {other:?}; expected resnet50, mobilenet_v2 or efficientnet_b0"
            )),
        }
    }
}

/// Pretrained convolutional feature extractor, used without its original
/// classifier top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneSpec {
    pub architecture: ArchitectureId,
    pub pretrained: bool,
    /// Whether the backbone starts out non-trainable. Phases may unfreeze
    /// trailing units via `Phase::unfreeze_last`.
    pub frozen: bool,
    /// Input (height, width); channels are always 3.
    pub input_size: (usize, usize),
}

/// The appended classification head:
/// global-average pool -> dropout -> dense+ReLU -> dropout -> dense+softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub dropout_pre: f64,
    pub dense_units: usize,
    pub dropout_post: f64,
    pub output_units: usize,
}

impl HeadSpec {
    pub fn validate(&self) -> Result<()> {
        for rate in [self.dropout_pre, self.dropout_post] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::InvalidHead(format!(
                    "dropout rate {rate} outside [0, 1)"
                )));
            }
        }
        if self.dense_units == 0 {
            return Err(Error::InvalidHead("dense layer must have units".into()));
        }
        if self.output_units < 2 {
            return Err(Error::TooFewOutputs(self.output_units));
        }
        Ok(())
    }

    /// Closed-form trainable parameter count given the pooled feature width.
    pub fn parameter_count(&self, feature_dim: usize) -> usize {
        feature_dim * self.dense_units
            + self.dense_units
            + self.dense_units * self.output_units
            + self.output_units
    }
}

/// Complete configuration for one classifier run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Stable identifier; also the run subdirectory and checkpoint stem.
    pub id: String,
    pub backbone: BackboneSpec,
    pub head: HeadSpec,
    pub normalization: NormalizationScheme,
    pub plan: TrainPlan,
    pub batch_size: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.head.validate()?;
        self.plan.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidPlan("batch size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json("serializing model config", e))?;
        s.push('\n');
        std::fs::write(path, s)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&raw).map_err(|e| Error::json("parsing model config", e))
    }

    pub fn for_architecture(arch: ArchitectureId, classes: usize) -> Result<ModelConfig> {
        match arch {
            ArchitectureId::Resnet50 => resnet50_config(classes),
            ArchitectureId::MobilenetV2 => mobilenet_v2_config(classes),
            ArchitectureId::EfficientnetB0 => efficientnet_b0_config(classes),
        }
    }
}

fn check_classes(classes: usize) -> Result<()> {
    if classes < 2 {
        return Err(Error::TooFewOutputs(classes));
    }
    Ok(())
}

/// Frozen ResNet50 feature extractor with a 256-unit head. Adam, up to 15
/// epochs, early stop patience 5 with best-weight restore, batch 32.
pub fn resnet50_config(classes: usize) -> Result<ModelConfig> {
    check_classes(classes)?;
    Ok(ModelConfig {
        id: ArchitectureId::Resnet50.as_str().to_string(),
        backbone: BackboneSpec {
            architecture: ArchitectureId::Resnet50,
            pretrained: true,
            frozen: true,
            input_size: (224, 224),
        },
        head: HeadSpec {
            dropout_pre: 0.5,
            dense_units: 256,
            dropout_post: 0.3,
            output_units: classes,
        },
        normalization: NormalizationScheme::backbone_native(ArchitectureId::Resnet50),
        plan: TrainPlan {
            phases: vec![Phase {
                name: "head".into(),
                optimizer: OptimizerId::Adam,
                learning_rate: DEFAULT_ADAM_LR,
                momentum: None,
                max_epochs: 15,
                unfreeze_last: 0,
                early_stop: Some(EarlyStopSpec {
                    patience: 5,
                    restore_best: true,
                }),
                plateau: None,
            }],
        },
        batch_size: DEFAULT_BATCH_SIZE,
    })
}

/// Frozen MobileNetV2 with a 128-unit head and [0, 1] input rescaling.
/// Adam, up to 30 epochs, early stop patience 5 with restore, batch 32.
pub fn mobilenet_v2_config(classes: usize) -> Result<ModelConfig> {
    check_classes(classes)?;
    Ok(ModelConfig {
        id: ArchitectureId::MobilenetV2.as_str().to_string(),
        backbone: BackboneSpec {
            architecture: ArchitectureId::MobilenetV2,
            pretrained: true,
            frozen: true,
            input_size: (224, 224),
        },
        head: HeadSpec {
            dropout_pre: 0.5,
            dense_units: 128,
            dropout_post: 0.3,
            output_units: classes,
        },
        normalization: NormalizationScheme::UnitScale,
        plan: TrainPlan {
            phases: vec![Phase {
                name: "head".into(),
                optimizer: OptimizerId::Adam,
                learning_rate: DEFAULT_ADAM_LR,
                momentum: None,
                max_epochs: 30,
                unfreeze_last: 0,
                early_stop: Some(EarlyStopSpec {
                    patience: 5,
                    restore_best: true,
                }),
                plateau: None,
            }],
        },
        batch_size: DEFAULT_BATCH_SIZE,
    })
}

/// Two-phase EfficientNetB0: 10 head-only epochs under Adam with early
/// stopping and plateau LR reduction, then SGD-with-momentum fine-tuning of
/// the last 10 backbone units until validation loss stops improving.
pub fn efficientnet_b0_config(classes: usize) -> Result<ModelConfig> {
    check_classes(classes)?;
    Ok(ModelConfig {
        id: ArchitectureId::EfficientnetB0.as_str().to_string(),
        backbone: BackboneSpec {
            architecture: ArchitectureId::EfficientnetB0,
            pretrained: true,
            frozen: true,
            input_size: (224, 224),
        },
        head: HeadSpec {
            dropout_pre: 0.5,
            dense_units: 256,
            dropout_post: 0.3,
            output_units: classes,
        },
        normalization: NormalizationScheme::backbone_native(ArchitectureId::EfficientnetB0),
        plan: TrainPlan {
            phases: vec![
                Phase {
                    name: "head".into(),
                    optimizer: OptimizerId::Adam,
                    learning_rate: DEFAULT_ADAM_LR,
                    momentum: None,
                    max_epochs: 10,
                    unfreeze_last: 0,
                    early_stop: Some(EarlyStopSpec {
                        patience: 5,
                        restore_best: true,
                    }),
                    plateau: Some(PlateauSpec {
                        factor: 0.5,
                        patience: 2,
                        min_lr: 1e-6,
                    }),
                },
                Phase {
                    name: "fine_tune".into(),
                    optimizer: OptimizerId::Sgd,
                    learning_rate: DEFAULT_FINE_TUNE_LR,
                    momentum: Some(DEFAULT_FINE_TUNE_MOMENTUM),
                    max_epochs: 20,
                    unfreeze_last: FINE_TUNE_UNFROZEN_UNITS,
                    early_stop: Some(EarlyStopSpec {
                        patience: 5,
                        restore_best: true,
                    }),
                    plateau: None,
                },
            ],
        },
        batch_size: DEFAULT_BATCH_SIZE,
    })
}
