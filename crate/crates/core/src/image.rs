//! RGB image buffers.

use std::path::Path;

use crate::error::{arg_err, GmeaError, Result};
use crate::scalar::Real;

/// Row-major `height x width x 3` image with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer<T> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<T>,
}

impl<T: Real> ImageBuffer<T> {
    pub fn black(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![T::zero(); width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height * 3],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                for c in 0..3 {
                    pixels.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return arg_err(format!(
                "pixel buffer of length {} does not match {width}x{height}x3",
                pixels.len()
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.pixels[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: T) {
        self.pixels[(y * self.width + x) * 3 + c] = v;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return arg_err(format!(
                "image dimensions differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            ));
        }
        Ok(())
    }

    /// One color channel as a row-major plane.
    pub fn channel(&self, c: usize) -> Vec<T> {
        self.pixels.iter().skip(c).step_by(3).copied().collect()
    }

    /// Mean absolute difference over all pixels and channels.
    pub fn mean_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_shape(other)?;
        let sum: T = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        Ok(sum / T::from_usize_lossy(self.pixels.len().max(1)))
    }

    /// Box-filter downscale by an integer factor.
    pub fn downscale(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return arg_err(format!("cannot downscale {}x{} by {factor}", self.width, self.height));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let norm = T::from_usize_lossy(factor * factor);
        Ok(Self::from_fn(w, h, |x, y, c| {
            let mut acc = T::zero();
            for dy in 0..factor {
                for dx in 0..factor {
                    acc += self.get(x * factor + dx, y * factor + dy, c);
                }
            }
            acc / norm
        }))
    }

    /// Quantizes to 8-bit RGB, rounding half away from zero.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| {
                let v = v.as_f64().clamp(0.0, 1.0) * 255.0;
                v.round() as u8
            })
            .collect()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .ok_or_else(|| GmeaError::Image("buffer size mismatch".into()))?;
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| GmeaError::Image(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb8_rounds_half_away_from_zero() {
        let img = ImageBuffer::from_pixels(1, 1, vec![0.5 / 255.0, 1.5 / 255.0, 2.0]).unwrap();
        assert_eq!(img.to_rgb8(), vec![1, 2, 255]);
    }

    #[test]
    fn downscale_averages_blocks() {
        let img = ImageBuffer::<f64>::from_fn(4, 2, |x, _, _| x as f64);
        let small = img.downscale(2).unwrap();
        assert_eq!(small.width, 2);
        assert_eq!(small.get(0, 0, 0), 0.5);
        assert_eq!(small.get(1, 0, 2), 2.5);
    }
}
