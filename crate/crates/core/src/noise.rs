//! Noise-level model, local contrast and the noise-aware histogram.
//!
//! A pixel contributes to the histogram only when its local contrast exceeds
//! the noise level expected at its illumination and its illumination bin lies
//! below the curve threshold. Flat noisy areas therefore carry no weight in
//! the curve design.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{gaussian_kernel, gaussian_plane};
use crate::image::{bin_of, ColorSpace, PlanarImage};

pub const BINS: usize = 256;

/// Signal-dependent noise standard deviation `n(I) = sqrt(a * I + b)` on the
/// unit intensity scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevelFunction {
    pub a: f64,
    pub b: f64,
}

impl Default for NoiseLevelFunction {
    fn default() -> Self {
        Self { a: 0.01, b: 0.0004 }
    }
}

impl NoiseLevelFunction {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let nlf = Self { a, b };
        nlf.validate()?;
        Ok(nlf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::param("noise_a", format!("must be finite and >= 0, got {}", self.a)));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::param("noise_b", format!("must be finite and >= 0, got {}", self.b)));
        }
        Ok(())
    }

    /// Expected noise standard deviation at intensity `intensity`.
    pub fn level(&self, intensity: f64) -> f64 {
        (self.a * intensity + self.b).max(0.0).sqrt()
    }
}

/// Gaussian-weighted local standard deviation, `sqrt(G*(l^2) - (G*l)^2)`.
pub fn local_contrast(img: &PlanarImage, sigma: f64) -> Result<PlanarImage> {
    img.expect_space(ColorSpace::Gray, "local_contrast")?;
    let kernel = gaussian_kernel(sigma)?;
    let (w, h) = (img.width(), img.height());
    let l = img.plane(0);
    let squares: Vec<f64> = l.iter().map(|v| v * v).collect();
    let mean = gaussian_plane(l, w, h, &kernel);
    let second = gaussian_plane(&squares, w, h, &kernel);
    let contrast = mean
        .par_iter()
        .zip(&second)
        .map(|(m, s)| (s - m * m).max(0.0).sqrt().min(1.0))
        .collect();
    Ok(PlanarImage::from_parts_unchecked(w, h, ColorSpace::Gray, vec![contrast]))
}

/// Intensity probabilities below a threshold bin, plus bookkeeping about
/// which pixels were counted.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseAwareHistogram {
    /// `p[I] = |B_I| / |S|`; zero for every bin at or above `threshold_bin`.
    pub p: [f64; BINS],
    /// Number of pixels that passed the contrast gate, `|S|`.
    pub s_count: usize,
    pub threshold_bin: usize,
    /// Sub-threshold pixels rejected by the contrast gate.
    pub excluded_count: usize,
    /// Pixels whose bin is at or above the threshold.
    pub above_count: usize,
    /// `true` when `S` was empty and `p` is the ungated sub-threshold histogram.
    pub fallback: bool,
}

impl NoiseAwareHistogram {
    pub fn total(&self) -> usize {
        self.s_count + self.excluded_count + self.above_count
    }

    /// Sum of `p`: 1 when any pixel was counted, 0 otherwise.
    pub fn mass(&self) -> f64 {
        self.p.iter().sum()
    }
}

fn check_threshold(threshold_bin: usize) -> Result<()> {
    if threshold_bin == 0 || threshold_bin > 255 {
        return Err(Error::param("threshold_bin", format!("must lie in 1..=255, got {threshold_bin}")));
    }
    Ok(())
}

fn normalize(counts: &[usize; BINS], total: usize) -> [f64; BINS] {
    let mut p = [0.0; BINS];
    if total > 0 {
        for (p, &c) in p.iter_mut().zip(counts) {
            *p = c as f64 / total as f64;
        }
    }
    p
}

/// Builds the histogram of illumination bins over the pixels whose local
/// contrast exceeds the noise level at their illumination.
///
/// When no pixel passes the gate, falls back to [`plain_histogram`] so the
/// curve still has a distribution to work with; `fallback` records this.
pub fn noise_aware_histogram(
    illumination: &PlanarImage,
    contrast: &PlanarImage,
    nlf: &NoiseLevelFunction,
    threshold_bin: usize,
) -> Result<NoiseAwareHistogram> {
    illumination.expect_space(ColorSpace::Gray, "noise_aware_histogram")?;
    contrast.expect_space(ColorSpace::Gray, "noise_aware_histogram")?;
    if !illumination.same_dimensions(contrast) {
        return Err(Error::InvalidInput(format!(
            "illumination is {}x{} but contrast is {}x{}",
            illumination.width(),
            illumination.height(),
            contrast.width(),
            contrast.height()
        )));
    }
    check_threshold(threshold_bin)?;
    nlf.validate()?;

    let mut counts = [0usize; BINS];
    let (mut s_count, mut excluded, mut above) = (0, 0, 0);
    for (&l, &c) in illumination.plane(0).iter().zip(contrast.plane(0)) {
        let bin = bin_of(l);
        if bin >= threshold_bin {
            above += 1;
        } else if c > nlf.level(l) {
            counts[bin] += 1;
            s_count += 1;
        } else {
            excluded += 1;
        }
    }

    if s_count == 0 {
        let plain = plain_histogram(illumination, threshold_bin)?;
        return Ok(NoiseAwareHistogram {
            s_count: 0,
            excluded_count: excluded,
            fallback: true,
            ..plain
        });
    }

    Ok(NoiseAwareHistogram {
        p: normalize(&counts, s_count),
        s_count,
        threshold_bin,
        excluded_count: excluded,
        above_count: above,
        fallback: false,
    })
}

/// Ungated histogram of the bins below `threshold_bin`; every sub-threshold
/// pixel counts toward `s_count`.
pub fn plain_histogram(values: &PlanarImage, threshold_bin: usize) -> Result<NoiseAwareHistogram> {
    values.expect_space(ColorSpace::Gray, "plain_histogram")?;
    check_threshold(threshold_bin)?;
    let mut counts = [0usize; BINS];
    let mut counted = 0;
    for &v in values.plane(0) {
        let bin = bin_of(v);
        if bin < threshold_bin {
            counts[bin] += 1;
            counted += 1;
        }
    }
    Ok(NoiseAwareHistogram {
        p: normalize(&counts, counted),
        s_count: counted,
        threshold_bin,
        excluded_count: 0,
        above_count: values.len() - counted,
        fallback: false,
    })
}

/// `bin,probability` rows, one per bin.
pub fn histogram_csv(hist: &NoiseAwareHistogram) -> String {
    let mut out = String::with_capacity(BINS * 12);
    for (i, p) in hist.p.iter().enumerate() {
        out.push_str(&format!("{i},{p}\n"));
    }
    out
}
