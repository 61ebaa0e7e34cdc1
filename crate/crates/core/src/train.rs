//! Training plans, per-epoch history records, and the callback state
//! machines (early stopping and plateau learning-rate reduction).
//!
//! The state machines are pure: feed one validation loss per epoch and
//! apply the returned decision. Improvement is strict (`<` with zero
//! min-delta), so a loss equal to the running minimum counts as no
//! improvement.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerId {
    Adam,
    /// Stochastic gradient descent with momentum.
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopSpec {
    pub patience: usize,
    pub restore_best: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauSpec {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

/// One stage of a training plan: optimizer, trainability, epoch budget,
/// callbacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub optimizer: OptimizerId,
    pub learning_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    pub max_epochs: usize,
    /// How many trailing backbone units are trainable during this phase
    /// (0 = backbone fully frozen; the head is always trainable).
    pub unfreeze_last: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<EarlyStopSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau: Option<PlateauSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub phases: Vec<Phase>,
}

impl TrainPlan {
    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::InvalidPlan("plan has no phases".into()));
        }
        for phase in &self.phases {
            if phase.max_epochs < 1 {
                return Err(Error::InvalidPlan(format!(
                    "phase {:?}: max_epochs must be >= 1",
                    phase.name
                )));
            }
            if phase.learning_rate <= 0.0 {
                return Err(Error::InvalidPlan(format!(
                    "phase {:?}: learning rate must be positive",
                    phase.name
                )));
            }
            if let Some(es) = &phase.early_stop {
                if es.patience < 1 {
                    return Err(Error::InvalidPlan(format!(
                        "phase {:?}: early-stop patience must be >= 1",
                        phase.name
                    )));
                }
            }
            if let Some(p) = &phase.plateau {
                if !(p.factor > 0.0 && p.factor < 1.0) {
                    return Err(Error::InvalidPlan(format!(
                        "phase {:?}: plateau factor must lie in (0, 1)",
                        phase.name
                    )));
                }
                if p.patience < 1 {
                    return Err(Error::InvalidPlan(format!(
                        "phase {:?}: plateau patience must be >= 1",
                        phase.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Metrics for one completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseHistory {
    pub name: String,
    pub records: Vec<EpochRecord>,
    /// 1-based epoch with minimal validation loss within this phase.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub phases: Vec<PhaseHistory>,
}

impl TrainingHistory {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json("serializing history", e))?;
        s.push('\n');
        std::fs::write(path, s)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&raw).map_err(|e| Error::json("parsing history", e))
    }

    /// Structural invariants: epochs strictly increasing from 1 and
    /// learning rates non-increasing within each phase.
    pub fn validate(&self) -> Result<()> {
        for phase in &self.phases {
            let mut last_lr = f64::INFINITY;
            for (i, r) in phase.records.iter().enumerate() {
                if r.epoch != i + 1 {
                    return Err(Error::InvalidPlan(format!(
                        "phase {:?}: epoch {} out of order",
                        phase.name, r.epoch
                    )));
                }
                if r.learning_rate > last_lr {
                    return Err(Error::InvalidPlan(format!(
                        "phase {:?}: learning rate rose at epoch {}",
                        phase.name, r.epoch
                    )));
                }
                last_lr = r.learning_rate;
            }
            if !phase.records.is_empty()
                && (phase.best_epoch == 0 || phase.best_epoch > phase.records.len())
            {
                return Err(Error::InvalidPlan(format!(
                    "phase {:?}: best_epoch {} outside history",
                    phase.name, phase.best_epoch
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Early stopping on validation loss with strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopState {
    patience: usize,
    epoch: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
    improved_last: bool,
}

impl EarlyStopState {
    pub fn new(patience: usize) -> Self {
        Self {
            patience: patience.max(1),
            epoch: 0,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
            improved_last: false,
        }
    }

    /// Feed the epoch's validation loss; `Stop` fires exactly when
    /// `patience` consecutive epochs fail to strictly improve the minimum.
    pub fn observe(&mut self, val_loss: f64) -> StopDecision {
        self.epoch += 1;
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = self.epoch;
            self.wait = 0;
            self.improved_last = true;
            StopDecision::Continue
        } else {
            self.wait += 1;
            self.improved_last = false;
            if self.wait >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }

    /// Whether the most recent observation improved the minimum.
    pub fn improved_last(&self) -> bool {
        self.improved_last
    }
}

/// Multiply the learning rate by `factor` after `patience` consecutive
/// epochs without strict improvement, floored at `min_lr`.
#[derive(Debug, Clone)]
pub struct PlateauState {
    spec: PlateauSpec,
    best: f64,
    wait: usize,
    lr: f64,
}

impl PlateauState {
    pub fn new(spec: PlateauSpec, initial_lr: f64) -> Self {
        Self {
            spec,
            best: f64::INFINITY,
            wait: 0,
            lr: initial_lr,
        }
    }

    /// Feed the epoch's validation loss; returns the learning rate to use
    /// from the next epoch on.
    pub fn observe(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best {
            self.best = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
            if self.wait >= self.spec.patience {
                self.lr = (self.lr * self.spec.factor).max(self.spec.min_lr);
                self.wait = 0;
            }
        }
        self.lr
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stop_monotone_improvement_never_stops() {
        let mut es = EarlyStopState::new(5);
        for loss in [0.5, 0.4, 0.3] {
            assert_eq!(es.observe(loss), StopDecision::Continue);
        }
        assert_eq!(es.best_epoch(), 3);
    }

    #[test]
    fn early_stop_hand_trace_stops_after_epoch_8() {
        // losses [1.0,.9,.8,.81,.82,.83,.84,.85], patience 5 -> stop at 8, best 3
        let losses = [1.0, 0.9, 0.8, 0.81, 0.82, 0.83, 0.84, 0.85];
        let mut es = EarlyStopState::new(5);
        let mut stopped_at = None;
        for (i, &loss) in losses.iter().enumerate() {
            if es.observe(loss) == StopDecision::Stop {
                stopped_at = Some(i + 1);
                break;
            }
        }
        assert_eq!(stopped_at, Some(8));
        assert_eq!(es.best_epoch(), 3);
    }

    #[test]
    fn early_stop_flat_losses_tie_counts_as_no_improvement() {
        // losses [.5,.5,.5,.5,.5,.5] patience 5 -> stop at epoch 6, best 1
        let mut es = EarlyStopState::new(5);
        let mut stopped_at = None;
        for epoch in 1..=6 {
            if es.observe(0.5) == StopDecision::Stop {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(6));
        assert_eq!(es.best_epoch(), 1);
    }

    #[test]
    fn plateau_halves_every_two_stagnant_epochs_and_never_rises() {
        let spec = PlateauSpec {
            factor: 0.5,
            patience: 2,
            min_lr: 1e-6,
        };
        let mut plateau = PlateauState::new(spec, 0.01);
        // epoch 1 establishes the best; rising losses afterwards
        let mut rates = Vec::new();
        let mut loss = 1.0;
        for _ in 0..7 {
            rates.push(plateau.observe(loss));
            loss += 0.1;
        }
        assert_eq!(rates, vec![0.01, 0.01, 0.005, 0.005, 0.0025, 0.0025, 0.00125]);
        for w in rates.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn plateau_floors_at_min_lr() {
        let spec = PlateauSpec {
            factor: 0.5,
            patience: 1,
            min_lr: 3e-3,
        };
        let mut plateau = PlateauState::new(spec, 0.01);
        plateau.observe(1.0);
        for _ in 0..10 {
            plateau.observe(2.0);
        }
        assert_eq!(plateau.learning_rate(), 3e-3);
    }

    #[test]
    fn plateau_improvement_resets_wait() {
        let spec = PlateauSpec {
            factor: 0.1,
            patience: 2,
            min_lr: 0.0,
        };
        let mut plateau = PlateauState::new(spec, 1.0);
        assert_eq!(plateau.observe(1.0), 1.0);
        assert_eq!(plateau.observe(1.5), 1.0); // wait 1
        assert_eq!(plateau.observe(0.5), 1.0); // improvement, wait resets
        assert_eq!(plateau.observe(0.6), 1.0); // wait 1
        assert_eq!(plateau.observe(0.7), 0.1); // wait 2 -> reduce
    }

    #[test]
    fn plan_validation_catches_bad_parameters() {
        let base = Phase {
            name: "head".into(),
            optimizer: OptimizerId::Adam,
            learning_rate: 1e-3,
            momentum: None,
            max_epochs: 5,
            unfreeze_last: 0,
            early_stop: None,
            plateau: None,
        };
        assert!(TrainPlan { phases: vec![] }.validate().is_err());
        assert!(TrainPlan {
            phases: vec![Phase {
                max_epochs: 0,
                ..base.clone()
            }]
        }
        .validate()
        .is_err());
        assert!(TrainPlan {
            phases: vec![Phase {
                plateau: Some(PlateauSpec {
                    factor: 1.0,
                    patience: 2,
                    min_lr: 0.0
                }),
                ..base.clone()
            }]
        }
        .validate()
        .is_err());
        assert!(TrainPlan {
            phases: vec![base]
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn history_validation_checks_order_and_lr() {
        let mut history = TrainingHistory {
            phases: vec![PhaseHistory {
                name: "head".into(),
                records: vec![
                    EpochRecord {
                        epoch: 1,
                        train_loss: 1.0,
                        val_loss: 1.0,
                        train_accuracy: 0.5,
                        val_accuracy: 0.5,
                        learning_rate: 1e-3,
                    },
                    EpochRecord {
                        epoch: 2,
                        train_loss: 0.8,
                        val_loss: 0.9,
                        train_accuracy: 0.6,
                        val_accuracy: 0.6,
                        learning_rate: 5e-4,
                    },
                ],
                best_epoch: 2,
                stopped_early: false,
            }],
        };
        history.validate().unwrap();
        history.phases[0].records[1].learning_rate = 2e-3;
        assert!(history.validate().is_err());
    }
}
