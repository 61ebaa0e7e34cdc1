//! The classification head: global-average pool -> dropout -> dense+ReLU
//! -> dropout -> dense. Softmax is applied by callers that need
//! probabilities; training consumes the logits directly.

use candle_core::Tensor;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use venation_core::model::HeadSpec;

use crate::error::Result;
use crate::layers::LinearUnit;
use crate::params::ParamStore;

pub struct Head {
    spec: HeadSpec,
    fc1: LinearUnit,
    fc2: LinearUnit,
}

impl Head {
    pub fn build(store: &mut ParamStore, spec: &HeadSpec, feature_dim: usize) -> Result<Self> {
        let fc1 = LinearUnit::build(store, "head.fc1", feature_dim, spec.dense_units)?;
        let fc2 = LinearUnit::build(store, "head.fc2", spec.dense_units, spec.output_units)?;
        Ok(Self {
            spec: spec.clone(),
            fc1,
            fc2,
        })
    }

    pub fn spec(&self) -> &HeadSpec {
        &self.spec
    }

    /// Inverted dropout with a deterministic seeded mask.
    fn dropout(x: &Tensor, rate: f64, rng: &mut ChaCha20Rng) -> Result<Tensor> {
        if rate == 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 - rate;
        let len = x.elem_count();
        let mask: Vec<f32> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < keep {
                    (1.0 / keep) as f32
                } else {
                    0.0
                }
            })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?;
        Ok(x.mul(&mask)?)
    }

    /// pooled: (B, feature_dim) -> logits (B, K). Dropout is active exactly
    /// when an RNG is supplied.
    pub fn forward(
        &self,
        pooled: &Tensor,
        trainable_from: usize,
        dropout_rng: Option<&mut ChaCha20Rng>,
    ) -> Result<Tensor> {
        match dropout_rng {
            Some(rng) => {
                let x = Self::dropout(pooled, self.spec.dropout_pre, rng)?;
                let x = self.fc1.forward(&x, trainable_from)?.relu()?;
                let x = Self::dropout(&x, self.spec.dropout_post, rng)?;
                self.fc2.forward(&x, trainable_from)
            }
            None => {
                let x = self.fc1.forward(pooled, trainable_from)?.relu()?;
                self.fc2.forward(&x, trainable_from)
            }
        }
    }
}
