//! Image buffers and file I/O.
//!
//! LDR outputs go to 8-bit PNG; HDR data (environment maps, depth, normal
//! buffers) goes to PFM. All in-memory pixels are `f64`, row-major, top
//! row first.

mod pfm;
mod png_io;

pub use pfm::{read_pfm_gray, read_pfm_rgb, write_pfm_gray, write_pfm_rgb};
pub use png_io::{read_png_gray, read_png_rgb, write_png_gray, write_png_rgb};

use crate::{Error, Result, Vec3};

/// RGB image, values typically in `[0,1]` for LDR use but unbounded for HDR.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    pub width: usize,
    pub height: usize,
    /// `3 * (y * width + x) + c`
    pub data: Vec<f64>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn filled(width: usize, height: usize, rgb: Vec3) -> Self {
        let mut img = Self::new(width, height);
        for p in 0..width * height {
            img.data[p * 3] = rgb.x;
            img.data[p * 3 + 1] = rgb.y;
            img.data[p * 3 + 2] = rgb.z;
        }
        img
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        3 * (y * self.width + x)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Vec3 {
        let i = self.idx(x, y);
        Vec3::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Vec3) {
        let i = self.idx(x, y);
        self.data[i] = v.x;
        self.data[i + 1] = v.y;
        self.data[i + 2] = v.z;
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn same_dims(&self, other: &ImageRgb) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Dimension(format!(
                "image dims {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Per-pixel clamp to `[0,1]`, used before LDR output.
    pub fn clamped01(&self) -> ImageRgb {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = v.clamp(0.0, 1.0);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &ImageRgb) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Single-channel image (masks, depth, per-pixel scalars).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }
}
