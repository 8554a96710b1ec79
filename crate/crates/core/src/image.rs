//! Channel-planar floating point images.

use crate::error::{Error, Result};

/// Color space tag carried by a [`PlanarImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Rgb,
    /// Hexcone HSV with hue scaled to `[0, 1]`.
    Hsv,
    Gray,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Rgb | ColorSpace::Hsv => 3,
            ColorSpace::Gray => 1,
        }
    }
}

/// An image stored as one plane per channel, every sample in `[0, 1]`.
///
/// Planes are row-major, `width * height` samples each.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    space: ColorSpace,
    planes: Vec<Vec<f64>>,
}

impl PlanarImage {
    /// Builds an image after checking every invariant: plane count matches the
    /// color space, plane lengths match the dimensions, and all samples are
    /// finite and inside `[0, 1]`.
    pub fn new(width: usize, height: usize, space: ColorSpace, planes: Vec<Vec<f64>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!("empty image ({width}x{height})")));
        }
        if planes.len() != space.channels() {
            return Err(Error::InvalidInput(format!(
                "{:?} needs {} planes, got {}",
                space,
                space.channels(),
                planes.len()
            )));
        }
        let len = width * height;
        for (c, plane) in planes.iter().enumerate() {
            if plane.len() != len {
                return Err(Error::InvalidInput(format!(
                    "plane {c} has {} samples, expected {len}",
                    plane.len()
                )));
            }
            if let Some(i) = plane.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidInput(format!(
                    "plane {c} sample {i} is {} (outside [0, 1])",
                    plane[i]
                )));
            }
        }
        Ok(Self {
            width,
            height,
            space,
            planes,
        })
    }

    /// Single-channel image from one plane.
    pub fn gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, ColorSpace::Gray, vec![data])
    }

    /// Constant image filled with `value` in every channel.
    pub fn filled(width: usize, height: usize, space: ColorSpace, value: f64) -> Result<Self> {
        let planes = vec![vec![value; width * height]; space.channels()];
        Self::new(width, height, space, planes)
    }

    /// Clamps every sample into `[0, 1]` instead of rejecting it. NaN maps to 0.
    pub fn from_unclamped(width: usize, height: usize, space: ColorSpace, mut planes: Vec<Vec<f64>>) -> Result<Self> {
        for plane in &mut planes {
            for v in plane.iter_mut() {
                *v = clamp_unit(*v);
            }
        }
        Self::new(width, height, space, planes)
    }

    pub(crate) fn from_parts_unchecked(width: usize, height: usize, space: ColorSpace, planes: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(planes.len(), space.channels());
        debug_assert!(planes.iter().all(|p| p.len() == width * height));
        debug_assert!(planes.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        Self {
            width,
            height,
            space,
            planes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        &self.planes[channel]
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Vec<f64>> {
        self.planes
    }

    /// Sample at column `x`, row `y`.
    pub fn get(&self, channel: usize, x: usize, y: usize) -> f64 {
        self.planes[channel][y * self.width + x]
    }

    pub fn same_dimensions(&self, other: &PlanarImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn expect_space(&self, space: ColorSpace, op: &str) -> Result<()> {
        if self.space != space {
            return Err(Error::InvalidInput(format!(
                "{op} expects a {space:?} image, got {:?}",
                self.space
            )));
        }
        Ok(())
    }

    /// Replaces one plane, keeping the other channels. Values are clamped.
    pub fn with_plane(mut self, channel: usize, mut data: Vec<f64>) -> Result<Self> {
        if channel >= self.planes.len() || data.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "cannot replace plane {channel} with {} samples",
                data.len()
            )));
        }
        data.iter_mut().for_each(|v| *v = clamp_unit(*v));
        self.planes[channel] = data;
        Ok(self)
    }
}

pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Histogram bin of a unit-range sample: `min(floor(v * 256), 255)`.
pub fn bin_of(v: f64) -> usize {
    ((v * 256.0).floor().max(0.0) as usize).min(255)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_nan() {
        assert!(PlanarImage::gray(1, 1, vec![1.5]).is_err());
        assert!(PlanarImage::gray(1, 1, vec![f64::NAN]).is_err());
        assert!(PlanarImage::gray(1, 1, vec![f64::INFINITY]).is_err());
        assert!(PlanarImage::gray(2, 1, vec![0.5]).is_err());
        assert!(PlanarImage::new(1, 1, ColorSpace::Gray, vec![vec![0.1], vec![0.2]]).is_err());
        assert!(PlanarImage::new(1, 1, ColorSpace::Rgb, vec![vec![0.1]]).is_err());
    }

    #[test]
    fn unclamped_constructor_clamps() {
        let img = PlanarImage::from_unclamped(3, 1, ColorSpace::Gray, vec![vec![-0.5, 0.5, f64::NAN]]).unwrap();
        assert_eq!(img.plane(0), &[0.0, 0.5, 0.0]);
    }

    #[test]
    fn bins() {
        assert_eq!(bin_of(0.0), 0);
        assert_eq!(bin_of(1.0), 255);
        assert_eq!(bin_of(0.5), 128);
        assert_eq!(bin_of(255.0 / 256.0), 255);
        assert_eq!(bin_of(254.999 / 256.0), 254);
        for i in 0..255 {
            assert_eq!(bin_of(i as f64 / 255.0), i);
        }
    }
}
