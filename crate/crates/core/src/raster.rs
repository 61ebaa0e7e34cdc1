//! In-memory raster images and decoding/resizing.
//!
//! [`RasterImage`] is a dense 8-bit image in row-major HWC layout with 1 or 3
//! channels. [`SignedField`] carries signed convolution outputs (the Sobel
//! gradients) without clamping.

use std::path::Path;

use image::imageops::FilterType;
use image::DynamicImage;

use crate::error::{Error, Result};

/// 8-bit image, row-major, interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if !(channels == 1 || channels == 3) {
            return Err(Error::ChannelMismatch {
                expected: 3,
                actual: channels,
            });
        }
        if data.len() != height * width * channels {
            return Err(Error::BufferLength {
                len: data.len(),
                height,
                width,
                channels,
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn constant(height: usize, width: usize, channels: usize, value: u8) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: u8) {
        self.data[(row * self.width + col) * self.channels + channel] = value;
    }

    /// Replicate a single-channel image into 3 identical channels.
    pub fn replicate_channels(&self) -> Result<RasterImage> {
        if self.channels != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                actual: self.channels,
            });
        }
        let mut data = Vec::with_capacity(self.data.len() * 3);
        for &v in &self.data {
            data.extend_from_slice(&[v, v, v]);
        }
        Ok(RasterImage {
            height: self.height,
            width: self.width,
            channels: 3,
            data,
        })
    }

    pub fn from_dynamic(img: &DynamicImage) -> RasterImage {
        let rgb = img.to_rgb8();
        RasterImage {
            height: rgb.height() as usize,
            width: rgb.width() as usize,
            channels: 3,
            data: rgb.into_raw(),
        }
    }

    fn to_dynamic(&self) -> DynamicImage {
        match self.channels {
            1 => DynamicImage::ImageLuma8(
                image::GrayImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
                    .expect("buffer length checked at construction"),
            ),
            _ => DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
                    .expect("buffer length checked at construction"),
            ),
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_dynamic()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                reason: format!("encode failed: {e}"),
            })
    }
}

/// Signed per-pixel field produced by gradient operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedField {
    height: usize,
    width: usize,
    data: Vec<i32>,
}

impl SignedField {
    pub fn new(height: usize, width: usize, data: Vec<i32>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::BufferLength {
                len: data.len(),
                height,
                width,
                channels: 1,
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: i32) {
        self.data[row * self.width + col] = value;
    }

    /// Transposed copy; used by tests for the Sobel symmetry property.
    pub fn transposed(&self) -> SignedField {
        let mut out = SignedField::zeros(self.width, self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }
}

/// Decode an image file and resize it to `target` (height, width) with
/// bilinear resampling, yielding a 3-channel image. Grayscale sources are
/// replicated across channels by the RGB conversion.
pub fn load_image(path: &Path, target: (usize, usize)) -> Result<RasterImage> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(resize_image(&RasterImage::from_dynamic(&img), target))
}

/// Bilinear resize to `target` (height, width). No-op when already sized.
pub fn resize_image(img: &RasterImage, target: (usize, usize)) -> RasterImage {
    let (th, tw) = target;
    if img.height == th && img.width == tw {
        return img.clone();
    }
    let resized = img
        .to_dynamic()
        .resize_exact(tw as u32, th as u32, FilterType::Triangle);
    match img.channels {
        1 => {
            let gray = resized.to_luma8();
            RasterImage {
                height: th,
                width: tw,
                channels: 1,
                data: gray.into_raw(),
            }
        }
        _ => RasterImage::from_dynamic(&resized),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_survives_bilinear_resize() {
        let img = RasterImage::constant(512, 512, 3, 137);
        let out = resize_image(&img, (224, 224));
        assert_eq!(out.height(), 224);
        assert_eq!(out.width(), 224);
        assert_eq!(out.channels(), 3);
        assert!(out.data().iter().all(|&v| v == 137));
    }

    #[test]
    fn replicate_channels_copies_values() {
        let img = RasterImage::new(2, 2, 1, vec![1, 2, 3, 4]).unwrap();
        let rgb = img.replicate_channels().unwrap();
        assert_eq!(rgb.channels(), 3);
        for r in 0..2 {
            for c in 0..2 {
                let v = img.get(r, c, 0);
                assert_eq!(rgb.get(r, c, 0), v);
                assert_eq!(rgb.get(r, c, 1), v);
                assert_eq!(rgb.get(r, c, 2), v);
            }
        }
    }

    #[test]
    fn buffer_length_is_validated() {
        assert!(matches!(
            RasterImage::new(2, 2, 3, vec![0; 5]),
            Err(Error::BufferLength { .. })
        ));
    }
}
