//! Turning manifest records into model-ready tensors.
//!
//! Images are decoded once and kept as 8-bit pixels; normalization happens
//! per batch. In venation mode each image runs through the enhancement
//! chain (or is read from a prepared cache directory) and is replicated to
//! 3 channels before normalization.

use std::path::{Path, PathBuf};

use candle_core::{Device, Tensor};
use serde::{Deserialize, Serialize};
use venation_core::dataset::{DatasetManifest, Split};
use venation_core::preprocess::{
    normalize_for_model, venation_pipeline, FloatTensor, NormalizationScheme, VenationConfig,
};
use venation_core::raster::{load_image, RasterImage};

use crate::error::{NnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    #[default]
    RawRgb,
    Venation,
}

impl std::str::FromStr for InputMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "raw_rgb" => Ok(InputMode::RawRgb),
            "venation" => Ok(InputMode::Venation),
            other => Err(format!(
                "unknown input mode {other:?}; expected raw_rgb or venation"
            )),
        }
    }
}

/// Where venation-mode inputs come from.
#[derive(Debug, Clone)]
pub enum VenationSource {
    /// Run the enhancement chain on the fly.
    Inline(VenationConfig),
    /// Read pre-enhanced PNGs from a mirrored cache directory.
    CacheDir(PathBuf),
}

/// A fully decoded split: ids and labels in manifest order, pixels resized
/// to the model input size.
pub struct LoadedSplit {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub pixels: Vec<RasterImage>,
}

impl LoadedSplit {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// The cache path mirroring a dataset-relative record path (extension
/// swapped to .png).
pub fn cache_path_for(cache_dir: &Path, record_path: &str) -> PathBuf {
    cache_dir.join(record_path).with_extension("png")
}

/// Decode every record of `split` in manifest order.
pub fn load_split(
    root: &Path,
    manifest: &DatasetManifest,
    split: Split,
    input_size: (usize, usize),
    mode: InputMode,
    venation: &VenationSource,
) -> Result<LoadedSplit> {
    let records = manifest.records_in(split);
    if records.is_empty() {
        return Err(NnError::EmptyData);
    }
    let mut ids = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut pixels = Vec::with_capacity(records.len());
    for record in records {
        let image = match (mode, venation) {
            (InputMode::RawRgb, _) => load_image(&root.join(&record.path), input_size)?,
            (InputMode::Venation, VenationSource::Inline(cfg)) => {
                let rgb = load_image(&root.join(&record.path), input_size)?;
                venation_pipeline(&rgb, cfg)?.replicate_channels()?
            }
            (InputMode::Venation, VenationSource::CacheDir(dir)) => {
                let cached = load_image(&cache_path_for(dir, &record.path), input_size)?;
                // cache files are single-channel PNGs; load_image yields
                // 3 replicated channels already
                cached
            }
        };
        ids.push(record.path.clone());
        labels.push(record.class_index);
        pixels.push(image);
    }
    Ok(LoadedSplit {
        ids,
        labels,
        pixels,
    })
}

/// Normalize and stack `indices` into an NCHW batch tensor.
pub fn batch_tensor(
    split: &LoadedSplit,
    indices: &[usize],
    scheme: &NormalizationScheme,
    device: &Device,
) -> Result<Tensor> {
    debug_assert!(!indices.is_empty());
    let (h, w) = (split.pixels[indices[0]].height(), split.pixels[indices[0]].width());
    let plane = h * w;
    let mut data = vec![0f32; indices.len() * 3 * plane];
    for (b, &idx) in indices.iter().enumerate() {
        let normalized: FloatTensor<f32> = normalize_for_model(&split.pixels[idx], scheme)?;
        let base = b * 3 * plane;
        for p in 0..plane {
            for c in 0..3 {
                data[base + c * plane + p] = normalized.data[p * 3 + c];
            }
        }
    }
    Ok(Tensor::from_vec(
        data,
        (indices.len(), 3, h, w),
        device,
    )?)
}

/// One-hot label batch: (B, K).
pub fn one_hot_batch(
    labels: &[usize],
    indices: &[usize],
    classes: usize,
    device: &Device,
) -> Result<Tensor> {
    let mut data = vec![0f32; indices.len() * classes];
    for (b, &idx) in indices.iter().enumerate() {
        let row: Vec<f32> = venation_core::dataset::one_hot(labels[idx], classes)?;
        data[b * classes..(b + 1) * classes].copy_from_slice(&row);
    }
    Ok(Tensor::from_vec(data, (indices.len(), classes), device)?)
}
