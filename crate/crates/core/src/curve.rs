//! Adaptive threshold, AGCWD curve design and the shadow-up lookup table.
//!
//! The mapping is the identity from the threshold bin upward. Below it, an
//! AGCWD gamma curve built from the (noise-aware) histogram is rescaled so
//! its range ends at the threshold, which keeps the whole curve continuous
//! and monotone.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};
use crate::noise::{NoiseAwareHistogram, BINS};

/// Outcome of the adaptive threshold computation, on the 8-bit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    /// The requested percentile of the illumination, in `[0, 255]`.
    pub percentile_value: f64,
    /// Pixels strictly between the percentile value and the maximum.
    pub h_count: usize,
    /// `round(255 - mean over H)`, or 255 when `H` is empty.
    pub threshold_bin: usize,
}

/// Linearly interpolated percentile (`0 < percentile < 100`) of a sample set.
pub fn percentile_of(values: &[f64], percentile: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = percentile / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Picks the upper limit of the nonlinear part of the curve from the bright
/// tail of the illumination: brighter images get a lower threshold.
pub fn compute_threshold(illumination: &PlanarImage, percentile: f64) -> Result<ThresholdReport> {
    illumination.expect_space(ColorSpace::Gray, "compute_threshold")?;
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::param("percentile", format!("must lie in (0, 100), got {percentile}")));
    }
    let codes: Vec<f64> = illumination.plane(0).iter().map(|v| v * 255.0).collect();
    let p = percentile_of(&codes, percentile);
    let max = codes.iter().copied().fold(f64::MIN, f64::max);
    let (sum, count) = codes
        .iter()
        .filter(|&&c| p < c && c < max)
        .fold((0.0, 0usize), |(s, n), &c| (s + c, n + 1));
    let threshold_bin = if count == 0 {
        255
    } else {
        (255.0 - sum / count as f64).round().clamp(1.0, 255.0) as usize
    };
    Ok(ThresholdReport {
        percentile_value: p,
        h_count: count,
        threshold_bin,
    })
}

/// A 256-entry tone curve on the unit scale, `lut[i]` being the output for
/// input `i / 255`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingCurve {
    pub lut: [f64; BINS],
    /// First bin of the identity part.
    pub threshold_bin: usize,
    pub alpha: f64,
}

fn identity_entry(i: usize) -> f64 {
    i as f64 / 255.0
}

impl MappingCurve {
    /// The identity curve. Its threshold is 0: nothing is remapped.
    pub fn identity() -> Self {
        let mut lut = [0.0; BINS];
        for (i, v) in lut.iter_mut().enumerate() {
            *v = identity_entry(i);
        }
        Self {
            lut,
            threshold_bin: 0,
            alpha: 0.0,
        }
    }

    /// Checks monotonicity, the identity tail and the seam bound.
    pub fn validate(&self) -> Result<()> {
        if self.lut.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("curve is not monotone".into()));
        }
        if (self.threshold_bin..BINS).any(|i| self.lut[i] != identity_entry(i)) {
            return Err(Error::InvalidInput("curve is not the identity above its threshold".into()));
        }
        if self.threshold_bin > 0 && self.lut[self.threshold_bin - 1] > identity_entry(self.threshold_bin) {
            return Err(Error::InvalidInput("curve overshoots the threshold".into()));
        }
        Ok(())
    }

    /// Output for one unit-scale input, interpolating linearly between entries.
    ///
    /// Inputs on a segment whose two endpoints are identity entries are
    /// returned unchanged.
    pub fn map(&self, v: f64) -> f64 {
        let pos = (v * 255.0).clamp(0.0, 255.0);
        let lo = (pos.floor() as usize).min(BINS - 2);
        let (a, b) = (self.lut[lo], self.lut[lo + 1]);
        if a == identity_entry(lo) && b == identity_entry(lo + 1) {
            return v;
        }
        let frac = pos - lo as f64;
        (a + frac * (b - a)).clamp(0.0, 1.0)
    }
}

/// Cumulative weighted distribution over the bins below `threshold_bin`.
///
/// The probabilities are reshaped as `pdf_max * ((pdf - pdf_min) / (pdf_max - pdf_min))^alpha`
/// and accumulated. A flat histogram (including an empty one) has no shape to
/// weight and yields the ramp `cdf(I) = I / threshold_bin`.
pub fn weighted_cdf(pdf: &[f64], alpha: f64, threshold_bin: usize) -> Vec<f64> {
    let pdf = &pdf[..threshold_bin];
    let max = pdf.iter().copied().fold(f64::MIN, f64::max);
    let min = pdf.iter().copied().fold(f64::MAX, f64::min);
    if max <= min {
        return (0..threshold_bin).map(|i| i as f64 / threshold_bin as f64).collect();
    }
    let weighted: Vec<f64> = pdf.iter().map(|&p| max * ((p - min) / (max - min)).powf(alpha)).collect();
    let total: f64 = weighted.iter().sum();
    let mut acc = 0.0;
    weighted
        .iter()
        .map(|w| {
            acc += w;
            (acc / total).min(1.0)
        })
        .collect()
}

/// Designs the shadow-up curve: AGCWD gamma below `threshold_bin`,
/// identity from it upward.
///
/// Below the threshold `T(I) = (t / 255) * (I / t)^(1 - cdf_w(I))` with
/// `t = threshold_bin`, so `T` never drops below the identity and never
/// exceeds `t / 255`.
pub fn design_agcwd(hist: &NoiseAwareHistogram, alpha: f64, threshold_bin: usize) -> Result<MappingCurve> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    if threshold_bin == 0 || threshold_bin > 255 {
        return Err(Error::param("threshold_bin", format!("must lie in 1..=255, got {threshold_bin}")));
    }
    let cdf = weighted_cdf(&hist.p, alpha, threshold_bin);
    let t = threshold_bin as f64;
    let mut lut = [0.0; BINS];
    let mut running = 0.0f64;
    for (i, v) in lut.iter_mut().enumerate() {
        let raw = if i < threshold_bin {
            (t / 255.0) * (i as f64 / t).powf(1.0 - cdf[i])
        } else {
            identity_entry(i)
        };
        running = running.max(raw);
        *v = if i < threshold_bin { running } else { raw };
    }
    Ok(MappingCurve {
        lut,
        threshold_bin,
        alpha,
    })
}

/// Maps every sample of a gray image through the curve.
pub fn apply_curve(img: &PlanarImage, curve: &MappingCurve) -> Result<PlanarImage> {
    img.expect_space(ColorSpace::Gray, "apply_curve")?;
    let out = img.plane(0).par_iter().map(|&v| curve.map(v)).collect();
    Ok(PlanarImage::from_parts_unchecked(img.width(), img.height(), ColorSpace::Gray, vec![out]))
}

/// `input,output` rows on the 0-255 scale, one per entry.
pub fn curve_csv(curve: &MappingCurve) -> String {
    let mut out = String::with_capacity(BINS * 16);
    for (i, v) in curve.lut.iter().enumerate() {
        let y = (v * 255.0 * 1e9).round() / 1e9;
        writeln!(out, "{i},{y}").unwrap();
    }
    out
}

/// Writes [`curve_csv`] to `path`.
pub fn export_curve(curve: &MappingCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, curve_csv(curve)).map_err(|e| Error::io(path, e))
}

/// Parses the output of [`curve_csv`] back into a unit-scale table.
pub fn parse_curve_csv(text: &str) -> Result<[f64; BINS]> {
    let mut lut = [f64::NAN; BINS];
    let mut rows = 0;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || Error::InvalidInput(format!("curve row {}: `{line}`", n + 1));
        let (i, y) = line.split_once(',').ok_or_else(bad)?;
        let i: usize = i.trim().parse().map_err(|_| bad())?;
        let y: f64 = y.trim().parse().map_err(|_| bad())?;
        *lut.get_mut(i).ok_or_else(bad)? = y / 255.0;
        rows += 1;
    }
    if rows != BINS || lut.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput(format!("expected {BINS} curve rows, got {rows}")));
    }
    Ok(lut)
}
