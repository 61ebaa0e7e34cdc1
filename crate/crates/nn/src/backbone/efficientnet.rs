//! EfficientNetB0: MBConv blocks with squeeze-excitation and SiLU,
//! torchvision parameter layout (`features.6.2.block.1.0.weight`, ...).
//!
//! Stochastic depth is a train-time regularizer with no parameters; this
//! implementation runs the residual adds deterministically, matching
//! inference behavior.

use candle_core::Tensor;

use super::Stage;
use crate::error::Result;
use crate::layers::{Activation, BatchNorm2dUnit, Conv2dUnit, global_average_pool};
use crate::params::ParamStore;

const BN_EPS: f64 = 1e-5;

/// (expand ratio, kernel, first stride, input channels, output channels, repeats)
const SETTINGS: [(usize, usize, usize, usize, usize, usize); 7] = [
    (1, 3, 1, 32, 16, 1),
    (6, 3, 2, 16, 24, 2),
    (6, 5, 2, 24, 40, 2),
    (6, 3, 2, 40, 80, 3),
    (6, 5, 1, 80, 112, 3),
    (6, 5, 2, 112, 192, 4),
    (6, 3, 1, 192, 320, 1),
];

struct ConvBnAct {
    conv: Conv2dUnit,
    bn: BatchNorm2dUnit,
    act: Activation,
    units: std::ops::Range<usize>,
}

impl ConvBnAct {
    #[allow(clippy::too_many_arguments)]
    fn build(
        store: &mut ParamStore,
        prefix: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        groups: usize,
        act: Activation,
    ) -> Result<Self> {
        let start = store.unit_count();
        let conv = Conv2dUnit::build(
            store,
            &format!("{prefix}.0"),
            in_channels,
            out_channels,
            kernel,
            stride,
            groups,
            false,
        )?;
        let bn = BatchNorm2dUnit::build(store, &format!("{prefix}.1"), out_channels, BN_EPS)?;
        Ok(Self {
            conv,
            bn,
            act,
            units: start..store.unit_count(),
        })
    }

    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let x = self.conv.forward(x, trainable_from)?;
        let x = self.bn.forward(&x, trainable_from)?;
        self.act.apply(&x)
    }
}

impl Stage for ConvBnAct {
    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        ConvBnAct::forward(self, x, trainable_from)
    }

    fn units(&self) -> std::ops::Range<usize> {
        self.units.clone()
    }
}

/// Squeeze-excitation: GAP -> 1x1 reduce + SiLU -> 1x1 expand + sigmoid,
/// scaling the input channel-wise. Both convolutions carry biases.
struct SqueezeExcitation {
    fc1: Conv2dUnit,
    fc2: Conv2dUnit,
}

impl SqueezeExcitation {
    fn build(store: &mut ParamStore, prefix: &str, channels: usize, squeeze: usize) -> Result<Self> {
        let fc1 = Conv2dUnit::build(store, &format!("{prefix}.fc1"), channels, squeeze, 1, 1, 1, true)?;
        let fc2 = Conv2dUnit::build(store, &format!("{prefix}.fc2"), squeeze, channels, 1, 1, 1, true)?;
        Ok(Self { fc1, fc2 })
    }

    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let (b, c) = (x.dim(0)?, x.dim(1)?);
        let pooled = global_average_pool(x)?.reshape((b, c, 1, 1))?;
        let s = self.fc1.forward(&pooled, trainable_from)?.silu()?;
        let s = self.fc2.forward(&s, trainable_from)?;
        let s = candle_nn::ops::sigmoid(&s)?;
        Ok(x.broadcast_mul(&s)?)
    }
}

struct MbConv {
    expand: Option<ConvBnAct>,
    depthwise: ConvBnAct,
    se: SqueezeExcitation,
    project: ConvBnAct,
    use_residual: bool,
    units: std::ops::Range<usize>,
}

impl MbConv {
    #[allow(clippy::too_many_arguments)]
    fn build(
        store: &mut ParamStore,
        prefix: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        expand_ratio: usize,
    ) -> Result<Self> {
        let start = store.unit_count();
        let hidden = in_channels * expand_ratio;
        let squeeze = (in_channels / 4).max(1);
        let mut idx = 0usize;
        let expand = if expand_ratio != 1 {
            let e = ConvBnAct::build(
                store,
                &format!("{prefix}.block.{idx}"),
                in_channels,
                hidden,
                1,
                1,
                1,
                Activation::Silu,
            )?;
            idx += 1;
            Some(e)
        } else {
            None
        };
        let depthwise = ConvBnAct::build(
            store,
            &format!("{prefix}.block.{idx}"),
            hidden,
            hidden,
            kernel,
            stride,
            hidden,
            Activation::Silu,
        )?;
        idx += 1;
        let se = SqueezeExcitation::build(store, &format!("{prefix}.block.{idx}"), hidden, squeeze)?;
        idx += 1;
        let project = ConvBnAct::build(
            store,
            &format!("{prefix}.block.{idx}"),
            hidden,
            out_channels,
            1,
            1,
            1,
            Activation::None,
        )?;
        Ok(Self {
            expand,
            depthwise,
            se,
            project,
            use_residual: stride == 1 && in_channels == out_channels,
            units: start..store.unit_count(),
        })
    }
}

impl Stage for MbConv {
    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let mut out = x.clone();
        if let Some(expand) = &self.expand {
            out = expand.forward(&out, trainable_from)?;
        }
        out = self.depthwise.forward(&out, trainable_from)?;
        out = self.se.forward(&out, trainable_from)?;
        out = self.project.forward(&out, trainable_from)?;
        if self.use_residual {
            out = (out + x)?;
        }
        Ok(out)
    }

    fn units(&self) -> std::ops::Range<usize> {
        self.units.clone()
    }
}

pub fn build(store: &mut ParamStore) -> Result<Vec<Box<dyn Stage>>> {
    let mut stages: Vec<Box<dyn Stage>> = Vec::new();
    stages.push(Box::new(ConvBnAct::build(
        store,
        "features.0",
        3,
        32,
        3,
        2,
        1,
        Activation::Silu,
    )?));

    for (stage_idx, (expand_ratio, kernel, first_stride, in_ch, out_ch, repeats)) in
        SETTINGS.into_iter().enumerate()
    {
        for block in 0..repeats {
            let (block_in, stride) = if block == 0 {
                (in_ch, first_stride)
            } else {
                (out_ch, 1)
            };
            stages.push(Box::new(MbConv::build(
                store,
                &format!("features.{}.{}", stage_idx + 1, block),
                block_in,
                out_ch,
                kernel,
                stride,
                expand_ratio,
            )?));
        }
    }

    stages.push(Box::new(ConvBnAct::build(
        store,
        "features.8",
        320,
        1280,
        1,
        1,
        1,
        Activation::Silu,
    )?));
    Ok(stages)
}
