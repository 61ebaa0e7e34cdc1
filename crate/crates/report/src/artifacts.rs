//! Loading and cross-validating one model run's persisted artifacts.

use std::path::{Path, PathBuf};

use venation_core::metrics::EvaluationReport;
use venation_core::model::ModelConfig;
use venation_core::train::TrainingHistory;

use crate::error::{ReportError, Result};

pub const MODEL_CONFIG_FILE: &str = "model_config.json";
pub const HISTORY_FILE: &str = "history.json";
pub const METRICS_TRAIN_FILE: &str = "metrics_train.json";
pub const METRICS_TEST_FILE: &str = "metrics_test.json";
pub const PREDICTIONS_TRAIN_FILE: &str = "predictions_train.csv";
pub const PREDICTIONS_TEST_FILE: &str = "predictions_test.csv";

/// Everything reporting needs from one run directory. Reports are computed
/// from these files alone; model weights are never consulted.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub run_id: String,
    pub dir: PathBuf,
    pub config: ModelConfig,
    pub history: TrainingHistory,
    pub metrics_train: EvaluationReport<f64>,
    pub metrics_test: EvaluationReport<f64>,
}

impl RunArtifacts {
    pub fn load(dir: &Path) -> Result<Self> {
        let require = |name: &str| -> Result<PathBuf> {
            let path = dir.join(name);
            if path.is_file() {
                Ok(path)
            } else {
                Err(ReportError::MissingArtifact(dir.to_path_buf(), name.into()))
            }
        };

        let config = ModelConfig::load(&require(MODEL_CONFIG_FILE)?)?;
        let history = TrainingHistory::load(&require(HISTORY_FILE)?)?;
        let metrics_train: EvaluationReport<f64> =
            EvaluationReport::load(&require(METRICS_TRAIN_FILE)?)?;
        let metrics_test: EvaluationReport<f64> =
            EvaluationReport::load(&require(METRICS_TEST_FILE)?)?;
        history.validate()?;

        let run_id = config.id.clone();
        let classes = config.head.output_units;
        if metrics_train.class_names != metrics_test.class_names {
            return Err(ReportError::Inconsistent {
                run_id,
                what: "class names between train and test metrics".into(),
            });
        }
        if metrics_test.class_names.len() != classes {
            return Err(ReportError::Inconsistent {
                run_id,
                what: format!(
                    "class count: config has {classes}, metrics have {}",
                    metrics_test.class_names.len()
                ),
            });
        }

        Ok(Self {
            run_id,
            dir: dir.to_path_buf(),
            config,
            history,
            metrics_train,
            metrics_test,
        })
    }

    pub fn predictions_paths(&self) -> (PathBuf, PathBuf) {
        (
            self.dir.join(PREDICTIONS_TRAIN_FILE),
            self.dir.join(PREDICTIONS_TEST_FILE),
        )
    }
}
