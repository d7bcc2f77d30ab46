use alloc::vec::Vec;

use crate::color::Rgb24;
use crate::error::{Error, Result};

/// Row-major grid of 24-bit pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<Rgb24>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb24>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, c: Rgb24) -> Result<Self> {
        Self::new(
            width,
            height,
            alloc::vec![c; width as usize * height as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb24] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb24] {
        &mut self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> Option<Rgb24> {
        if x >= self.width || y >= self.height {
            return None;
        }
        Some(self.pixels[y as usize * self.width as usize + x as usize])
    }

    /// Applies `f` to every pixel.
    pub fn map(&self, mut f: impl FnMut(Rgb24) -> Rgb24) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Number of distinct colors.
    pub fn distinct_colors(&self) -> usize {
        let mut v = self.pixels.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    pub fn into_pixels(self) -> Vec<Rgb24> {
        self.pixels
    }
}
