//! ResNet50 (v1.5): 7x7 stem, max-pool, and 3-4-6-3 bottleneck blocks with
//! the stride on each block's 3x3 convolution. Parameter names follow the
//! torchvision layout (`conv1.weight`, `layer3.2.bn1.running_mean`, ...).

use candle_core::{Tensor, D};

use super::Stage;
use crate::error::Result;
use crate::layers::{BatchNorm2dUnit, Conv2dUnit};
use crate::params::ParamStore;

const BN_EPS: f64 = 1e-5;

struct Stem {
    conv: Conv2dUnit,
    bn: BatchNorm2dUnit,
    units: std::ops::Range<usize>,
}

impl Stage for Stem {
    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let x = self.conv.forward(x, trainable_from)?;
        let x = self.bn.forward(&x, trainable_from)?;
        let x = x.relu()?;
        // 3x3/2 max pool with padding 1; inputs are post-ReLU, so zero
        // padding is equivalent to -inf padding.
        let x = x
            .pad_with_zeros(D::Minus1, 1, 1)?
            .pad_with_zeros(D::Minus2, 1, 1)?;
        Ok(x.max_pool2d_with_stride(3, 2)?)
    }

    fn units(&self) -> std::ops::Range<usize> {
        self.units.clone()
    }
}

struct Bottleneck {
    conv1: Conv2dUnit,
    bn1: BatchNorm2dUnit,
    conv2: Conv2dUnit,
    bn2: BatchNorm2dUnit,
    conv3: Conv2dUnit,
    bn3: BatchNorm2dUnit,
    downsample: Option<(Conv2dUnit, BatchNorm2dUnit)>,
    units: std::ops::Range<usize>,
}

impl Bottleneck {
    #[allow(clippy::too_many_arguments)]
    fn build(
        store: &mut ParamStore,
        prefix: &str,
        in_channels: usize,
        width: usize,
        out_channels: usize,
        stride: usize,
    ) -> Result<Self> {
        let start = store.unit_count();
        let conv1 = Conv2dUnit::build(store, &format!("{prefix}.conv1"), in_channels, width, 1, 1, 1, false)?;
        let bn1 = BatchNorm2dUnit::build(store, &format!("{prefix}.bn1"), width, BN_EPS)?;
        let conv2 = Conv2dUnit::build(store, &format!("{prefix}.conv2"), width, width, 3, stride, 1, false)?;
        let bn2 = BatchNorm2dUnit::build(store, &format!("{prefix}.bn2"), width, BN_EPS)?;
        let conv3 = Conv2dUnit::build(store, &format!("{prefix}.conv3"), width, out_channels, 1, 1, 1, false)?;
        let bn3 = BatchNorm2dUnit::build(store, &format!("{prefix}.bn3"), out_channels, BN_EPS)?;
        let downsample = if stride != 1 || in_channels != out_channels {
            let conv = Conv2dUnit::build(
                store,
                &format!("{prefix}.downsample.0"),
                in_channels,
                out_channels,
                1,
                stride,
                1,
                false,
            )?;
            let bn = BatchNorm2dUnit::build(store, &format!("{prefix}.downsample.1"), out_channels, BN_EPS)?;
            Some((conv, bn))
        } else {
            None
        };
        Ok(Self {
            conv1,
            bn1,
            conv2,
            bn2,
            conv3,
            bn3,
            downsample,
            units: start..store.unit_count(),
        })
    }
}

impl Stage for Bottleneck {
    fn forward(&self, x: &Tensor, trainable_from: usize) -> Result<Tensor> {
        let identity = match &self.downsample {
            Some((conv, bn)) => {
                let d = conv.forward(x, trainable_from)?;
                bn.forward(&d, trainable_from)?
            }
            None => x.clone(),
        };
        let out = self.conv1.forward(x, trainable_from)?;
        let out = self.bn1.forward(&out, trainable_from)?.relu()?;
        let out = self.conv2.forward(&out, trainable_from)?;
        let out = self.bn2.forward(&out, trainable_from)?.relu()?;
        let out = self.conv3.forward(&out, trainable_from)?;
        let out = self.bn3.forward(&out, trainable_from)?;
        Ok((out + identity)?.relu()?)
    }

    fn units(&self) -> std::ops::Range<usize> {
        self.units.clone()
    }
}

pub fn build(store: &mut ParamStore) -> Result<Vec<Box<dyn Stage>>> {
    let mut stages: Vec<Box<dyn Stage>> = Vec::new();

    let start = store.unit_count();
    let conv = Conv2dUnit::build(store, "conv1", 3, 64, 7, 2, 1, false)?;
    let bn = BatchNorm2dUnit::build(store, "bn1", 64, BN_EPS)?;
    stages.push(Box::new(Stem {
        conv,
        bn,
        units: start..store.unit_count(),
    }));

    // (blocks, width, out_channels, first stride)
    let layout = [(3, 64, 256, 1), (4, 128, 512, 2), (6, 256, 1024, 2), (3, 512, 2048, 2)];
    let mut in_channels = 64;
    for (layer_idx, (blocks, width, out_channels, first_stride)) in layout.into_iter().enumerate() {
        for block in 0..blocks {
            let stride = if block == 0 { first_stride } else { 1 };
            let prefix = format!("layer{}.{}", layer_idx + 1, block);
            stages.push(Box::new(Bottleneck::build(
                store,
                &prefix,
                in_channels,
                width,
                out_channels,
                stride,
            )?));
            in_channels = out_channels;
        }
    }
    Ok(stages)
}
