//! Optimizers for the training phases: Adam (via candle's AdamW with zero
//! weight decay) and SGD with classical momentum, which candle does not
//! ship.

use candle_core::backprop::GradStore;
use candle_core::{Tensor, Var};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use venation_core::train::{OptimizerId, Phase};

use crate::error::Result;

/// SGD with momentum: v <- m*v + g; p <- p - lr*v.
pub struct MomentumSgd {
    vars: Vec<Var>,
    velocity: Vec<Option<Tensor>>,
    learning_rate: f64,
    momentum: f64,
}

impl MomentumSgd {
    pub fn new(vars: Vec<Var>, learning_rate: f64, momentum: f64) -> Self {
        let velocity = vec![None; vars.len()];
        Self {
            vars,
            velocity,
            learning_rate,
            momentum,
        }
    }

    fn step(&mut self, grads: &GradStore) -> Result<()> {
        for (var, velocity) in self.vars.iter().zip(self.velocity.iter_mut()) {
            if let Some(grad) = grads.get(var) {
                let v = match velocity.take() {
                    Some(v) => ((v * self.momentum)? + grad)?,
                    None => grad.clone(),
                };
                var.set(&var.sub(&(&v * self.learning_rate)?)?)?;
                *velocity = Some(v);
            }
        }
        Ok(())
    }
}

/// The optimizer selected by a phase spec.
pub enum PhaseOptimizer {
    Adam(AdamW),
    Sgd(MomentumSgd),
}

impl PhaseOptimizer {
    pub fn for_phase(phase: &Phase, vars: Vec<Var>) -> Result<Self> {
        Ok(match phase.optimizer {
            OptimizerId::Adam => PhaseOptimizer::Adam(AdamW::new(
                vars,
                ParamsAdamW {
                    lr: phase.learning_rate,
                    weight_decay: 0.0,
                    ..Default::default()
                },
            )?),
            OptimizerId::Sgd => PhaseOptimizer::Sgd(MomentumSgd::new(
                vars,
                phase.learning_rate,
                phase.momentum.unwrap_or(0.0),
            )),
        })
    }

    pub fn backward_step(&mut self, loss: &Tensor) -> Result<()> {
        let grads = loss.backward()?;
        match self {
            PhaseOptimizer::Adam(adam) => adam.step(&grads)?,
            PhaseOptimizer::Sgd(sgd) => sgd.step(&grads)?,
        }
        Ok(())
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        match self {
            PhaseOptimizer::Adam(adam) => adam.set_learning_rate(lr),
            PhaseOptimizer::Sgd(sgd) => sgd.learning_rate = lr,
        }
    }
}
