use std::path::Path;

use image::imageops::{self, FilterType};

use crate::{Error, Result};

/// Side length used for pixel-space comparisons.
pub const DEFAULT_TARGET_SIDE: u32 = 224;

/// Single-channel image, row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch(pixels.len(), width * height));
        }
        if let Some(p) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutOfRange(format!(
                "pixel {p} = {} outside [0, 1]",
                pixels[p]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }
}

/// Decodes a PNG or JPEG, converts to luminance and resamples bilinearly to
/// `target_side x target_side`.
pub fn load_gray_image(path: impl AsRef<Path>, target_side: u32) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gray(&bytes, target_side)
}

pub(crate) fn decode_gray(bytes: &[u8], target_side: u32) -> Result<GrayImage> {
    if target_side == 0 {
        return Err(Error::ZeroDimension);
    }
    let img = image::load_from_memory(bytes).map_err(|e| Error::DecodeFailure(e.to_string()))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::ZeroDimension);
    }
    let luma = img.to_luma32f();
    let resized = if luma.dimensions() == (target_side, target_side) {
        luma
    } else {
        imageops::resize(&luma, target_side, target_side, FilterType::Triangle)
    };
    let side = target_side as usize;
    let pixels = resized
        .into_raw()
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    GrayImage::new(side, side, pixels)
}
