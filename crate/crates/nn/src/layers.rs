//! Thin layer wrappers around candle ops with unit-level freeze control.
//!
//! Each layer knows its unit index; during a forward pass, parameters of
//! units below `trainable_from` enter the graph detached, so gradients stop
//! exactly at the frozen/trainable boundary. Batch-norm always runs in
//! inference mode on its running statistics (frozen-backbone convention);
//! only its affine parameters can train.

use candle_core::{Tensor, Var, D};

use crate::error::Result;
use crate::params::{Init, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Relu6,
    Silu,
}

impl Activation {
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        Ok(match self {
            Activation::None => x.clone(),
            Activation::Relu => x.relu()?,
            Activation::Relu6 => x.clamp(0f32, 6f32)?,
            Activation::Silu => x.silu()?,
        })
    }
}

#[inline]
fn live(var: &Var, unit: usize, trainable_from: usize) -> Tensor {
    if unit >= trainable_from {
        var.as_tensor().clone()
    } else {
        var.as_tensor().detach()
    }
}

#[derive(Debug, Clone)]
pub struct Conv2dUnit {
    unit: usize,
    weight: Var,
    bias: Option<Var>,
    stride: usize,
    padding: usize,
    groups: usize,
}

impl Conv2dUnit {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        store: &mut ParamStore,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        groups: usize,
        bias: bool,
    ) -> Result<Self> {
        let unit = store.begin_unit(name);
        let shape = [out_channels, in_channels / groups, kernel, kernel];
        let init = Init::KaimingNormal {
            fan_out: out_channels * kernel * kernel,
        };
        let weight = store.param(&format!("{name}.weight"), &shape, init, true)?;
        let bias = if bias {
            Some(store.param(
                &format!("{name}.bias"),
                &[out_channels],
                Init::Const(0.0),
                true,
            )?)
        } else {
            None
        };
        Ok(Self {
            unit,
            weight,
            bias,
            stride,
            padding: (kernel - 1) / 2,
            groups,
        })
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let weight = live(&self.weight, self.unit, trainable_from);
        let mut out = x.conv2d(&weight, self.padding, self.stride, 1, self.groups)?;
        if let Some(bias) = &self.bias {
            let bias = live(bias, self.unit, trainable_from);
            out = out.broadcast_add(&bias.reshape((1, (), 1, 1))?)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm2dUnit {
    unit: usize,
    gamma: Var,
    beta: Var,
    running_mean: Tensor,
    running_var: Tensor,
    eps: f64,
}

impl BatchNorm2dUnit {
    pub fn build(store: &mut ParamStore, name: &str, channels: usize, eps: f64) -> Result<Self> {
        let unit = store.begin_unit(name);
        let gamma = store.param(&format!("{name}.weight"), &[channels], Init::Const(1.0), true)?;
        let beta = store.param(&format!("{name}.bias"), &[channels], Init::Const(0.0), true)?;
        let running_mean = store.buffer(&format!("{name}.running_mean"), &[channels], 0.0)?;
        let running_var = store.buffer(&format!("{name}.running_var"), &[channels], 1.0)?;
        Ok(Self {
            unit,
            gamma,
            beta,
            running_mean,
            running_var,
            eps,
        })
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let gamma = live(&self.gamma, self.unit, trainable_from);
        let beta = live(&self.beta, self.unit, trainable_from);
        let inv_std = (&self.running_var + self.eps)?.sqrt()?.recip()?;
        let scale = gamma.mul(&inv_std)?.reshape((1, (), 1, 1))?;
        let shift = beta
            .sub(&gamma.mul(&inv_std)?.mul(&self.running_mean)?)?
            .reshape((1, (), 1, 1))?;
        Ok(x.broadcast_mul(&scale)?.broadcast_add(&shift)?)
    }
}

#[derive(Debug, Clone)]
pub struct LinearUnit {
    unit: usize,
    weight: Var,
    bias: Var,
}

impl LinearUnit {
    pub fn build(
        store: &mut ParamStore,
        name: &str,
        in_features: usize,
        out_features: usize,
    ) -> Result<Self> {
        let unit = store.begin_unit(name);
        let weight = store.param(
            &format!("{name}.weight"),
            &[out_features, in_features],
            Init::GlorotUniform {
                fan_in: in_features,
                fan_out: out_features,
            },
            false,
        )?;
        let bias = store.param(
            &format!("{name}.bias"),
            &[out_features],
            Init::Const(0.0),
            false,
        )?;
        Ok(Self { unit, weight, bias })
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    /// x: (B, in) -> (B, out)
    pub fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let weight = live(&self.weight, self.unit, trainable_from);
        let bias = live(&self.bias, self.unit, trainable_from);
        Ok(x.matmul(&weight.t()?)?.broadcast_add(&bias)?)
    }
}

/// Global average pooling: (B, C, H, W) -> (B, C).
pub fn global_average_pool(x: &Tensor) -> Result<Tensor> {
    Ok(x.mean(D::Minus1)?.mean(D::Minus1)?)
}
