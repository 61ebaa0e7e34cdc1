//! MobileNetV2: inverted residual blocks with ReLU6, torchvision parameter
//! layout (`features.3.conv.1.0.weight`, ...).

use candle_core::Tensor;

use super::Stage;
use crate::error::Result;
use crate::layers::{Activation, BatchNorm2dUnit, Conv2dUnit};
use crate::params::ParamStore;

const BN_EPS: f64 = 1e-5;

/// (expand ratio, output channels, repeats, first stride)
const SETTINGS: [(usize, usize, usize, usize); 7] = [
    (1, 16, 1, 1),
    (6, 24, 2, 2),
    (6, 32, 3, 2),
    (6, 64, 4, 2),
    (6, 96, 3, 1),
    (6, 160, 3, 2),
    (6, 320, 1, 1),
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
        conv_name: &str,
        bn_name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        groups: usize,
        act: Activation,
    ) -> Result<Self> {
        let start = store.unit_count();
        let conv = Conv2dUnit::build(store, conv_name, in_channels, out_channels, kernel, stride, groups, false)?;
        let bn = BatchNorm2dUnit::build(store, bn_name, out_channels, BN_EPS)?;
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

struct InvertedResidual {
    expand: Option<ConvBnAct>,
    depthwise: ConvBnAct,
    project_conv: Conv2dUnit,
    project_bn: BatchNorm2dUnit,
    use_residual: bool,
    units: std::ops::Range<usize>,
}

impl InvertedResidual {
    fn build(
        store: &mut ParamStore,
        prefix: &str,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        expand_ratio: usize,
    ) -> Result<Self> {
        let start = store.unit_count();
        let hidden = in_channels * expand_ratio;
        // torchvision indexes the inner Sequential: with expansion the
        // layers sit at conv.{0,1,2,3}, without at conv.{0,1,2}.
        let (expand, dw_idx, proj_idx) = if expand_ratio != 1 {
            let expand = ConvBnAct::build(
                store,
                &format!("{prefix}.conv.0.0"),
                &format!("{prefix}.conv.0.1"),
                in_channels,
                hidden,
                1,
                1,
                1,
                Activation::Relu6,
            )?;
            (Some(expand), 1usize, 2usize)
        } else {
            (None, 0usize, 1usize)
        };
        let depthwise = ConvBnAct::build(
            store,
            &format!("{prefix}.conv.{dw_idx}.0"),
            &format!("{prefix}.conv.{dw_idx}.1"),
            hidden,
            hidden,
            3,
            stride,
            hidden,
            Activation::Relu6,
        )?;
        let project_conv = Conv2dUnit::build(
            store,
            &format!("{prefix}.conv.{proj_idx}"),
            hidden,
            out_channels,
            1,
            1,
            1,
            false,
        )?;
        let project_bn = BatchNorm2dUnit::build(
            store,
            &format!("{prefix}.conv.{}", proj_idx + 1),
            out_channels,
            BN_EPS,
        )?;
        Ok(Self {
            expand,
            depthwise,
            project_conv,
            project_bn,
            use_residual: stride == 1 && in_channels == out_channels,
            units: start..store.unit_count(),
        })
    }
}

impl Stage for InvertedResidual {
    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let mut out = x.clone();
        if let Some(expand) = &self.expand {
            out = expand.forward(&out, trainable_from)?;
        }
        out = self.depthwise.forward(&out, trainable_from)?;
        out = self.project_conv.forward(&out, trainable_from)?;
        out = self.project_bn.forward(&out, trainable_from)?;
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
        "features.0.0",
        "features.0.1",
        3,
        32,
        3,
        2,
        1,
        Activation::Relu6,
    )?));

    let mut in_channels = 32;
    let mut feature_idx = 1;
    for (expand_ratio, out_channels, repeats, first_stride) in SETTINGS {
        for block in 0..repeats {
            let stride = if block == 0 { first_stride } else { 1 };
            stages.push(Box::new(InvertedResidual::build(
                store,
                &format!("features.{feature_idx}"),
                in_channels,
                out_channels,
                stride,
                expand_ratio,
            )?));
            in_channels = out_channels;
            feature_idx += 1;
        }
    }

    stages.push(Box::new(ConvBnAct::build(
        store,
        "features.18.0",
        "features.18.1",
        in_channels,
        1280,
        1,
        1,
        1,
        Activation::Relu6,
    )?));
    Ok(stages)
}
