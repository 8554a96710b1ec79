//! End-to-end enhancement: RGB -> HSV, Retinex split of V, noise-aware
//! shadow-up curve on the illumination, recombination, HSV -> RGB.

use std::time::Instant;

use crate::color::{hsv_to_rgb, rgb_to_hsv};
use crate::curve::{apply_curve, compute_threshold, design_agcwd, percentile_of, MappingCurve, ThresholdReport};
use crate::decompose::{decompose_best_effort, Decomposition, SolverConfig};
use crate::error::{Error, Result};
use crate::image::{clamp_unit, ColorSpace, PlanarImage};
use crate::noise::{local_contrast, noise_aware_histogram, plain_histogram, NoiseAwareHistogram, NoiseLevelFunction};

/// Which image the local contrast of the noise gate is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContrastSource {
    /// The value channel, where the noise lives.
    #[default]
    Value,
    /// The illumination layer.
    Illumination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Retinex split plus noise-aware shadow-up curve.
    #[default]
    Proposed,
    /// Full-range AGCWD on V, no split, no gate, no threshold.
    AgcwdPlain,
}

/// Every tunable of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceConfig {
    /// Percentile of the illumination that starts the bright tail, in (0, 100).
    pub percentile: f64,
    /// AGCWD weighting exponent in [0, 1].
    pub alpha: f64,
    pub solver: SolverConfig,
    /// Gaussian scale of the local contrast estimate, in pixels.
    pub sigma: f64,
    pub noise: NoiseLevelFunction,
    pub contrast_source: ContrastSource,
    pub mode: Mode,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            percentile: 75.0,
            alpha: 0.5,
            solver: SolverConfig::default(),
            sigma: 3.0,
            noise: NoiseLevelFunction::default(),
            contrast_source: ContrastSource::Value,
            mode: Mode::Proposed,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(Error::param("percentile", format!("must lie in (0, 100), got {}", self.percentile)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive, got {}", self.sigma)));
        }
        self.solver.validate()?;
        self.noise.validate()
    }
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub decompose: f64,
    pub histogram: f64,
    pub curve: f64,
    pub apply: f64,
    pub total: f64,
}

/// Diagnostics of one enhancement run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceReport {
    pub threshold: ThresholdReport,
    /// Pixels that passed the noise gate.
    pub s_count: usize,
    /// The gate rejected every pixel and the ungated histogram was used.
    pub histogram_fallback: bool,
    pub residual: f64,
    pub iterations: usize,
    pub timings: StageTimings,
}

impl EnhanceReport {
    /// JSON object with `threshold_bin`, `percentile_value`, `s_count`,
    /// `residual` and `timings_ms`.
    pub fn to_json(&self) -> String {
        let value = serde_json::json!({
            "threshold_bin": self.threshold.threshold_bin,
            "percentile_value": self.threshold.percentile_value,
            "s_count": self.s_count,
            "residual": self.residual,
            "timings_ms": {
                "decompose": self.timings.decompose,
                "histogram": self.timings.histogram,
                "curve": self.timings.curve,
                "apply": self.timings.apply,
                "total": self.timings.total,
            },
        });
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

/// Intermediate layers of the value-channel enhancement.
#[derive(Debug, Clone)]
pub struct ValueEnhancement {
    pub decomposition: Decomposition,
    pub contrast: PlanarImage,
    pub histogram: NoiseAwareHistogram,
    pub curve: MappingCurve,
    /// `F(I)`.
    pub enhanced_illumination: PlanarImage,
    /// `V' = F(I) * R`, clamped to [0, 1].
    pub value: PlanarImage,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Enhances a value channel. Decomposition, threshold, noise-aware
/// histogram, curve design, curve application and recombination, in order.
///
/// A solver that misses its tolerance yields [`Error::NotConverged`] with the
/// report of the completed run attached.
pub fn enhance_value(v: &PlanarImage, cfg: &EnhanceConfig) -> Result<(ValueEnhancement, EnhanceReport)> {
    v.expect_space(ColorSpace::Gray, "enhance_value")?;
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let decomposition = decompose_best_effort(v, &cfg.solver)?;
    timings.decompose = millis(t);

    let t = Instant::now();
    let illumination = &decomposition.illumination;
    let threshold = compute_threshold(illumination, cfg.percentile)?;
    let contrast = match cfg.contrast_source {
        ContrastSource::Value => local_contrast(v, cfg.sigma)?,
        ContrastSource::Illumination => local_contrast(illumination, cfg.sigma)?,
    };
    let histogram = noise_aware_histogram(illumination, &contrast, &cfg.noise, threshold.threshold_bin)?;
    timings.histogram = millis(t);

    let t = Instant::now();
    let curve = design_agcwd(&histogram, cfg.alpha, threshold.threshold_bin)?;
    timings.curve = millis(t);

    let t = Instant::now();
    let enhanced_illumination = apply_curve(illumination, &curve)?;
    let value: Vec<f64> = enhanced_illumination
        .plane(0)
        .iter()
        .zip(decomposition.reflectance.plane(0))
        .map(|(i, r)| clamp_unit(i * r))
        .collect();
    let value = PlanarImage::from_parts_unchecked(v.width(), v.height(), ColorSpace::Gray, vec![value]);
    timings.apply = millis(t);
    timings.total = millis(start);

    let report = EnhanceReport {
        threshold,
        s_count: histogram.s_count,
        histogram_fallback: histogram.fallback,
        residual: decomposition.residual,
        iterations: decomposition.iterations,
        timings,
    };
    if decomposition.residual > cfg.solver.tolerance {
        return Err(Error::NotConverged {
            residual: decomposition.residual,
            iterations: decomposition.iterations,
            report: Some(Box::new(report)),
        });
    }
    let layers = ValueEnhancement {
        decomposition,
        contrast,
        histogram,
        curve,
        enhanced_illumination,
        value,
    };
    Ok((layers, report))
}

/// Plain AGCWD on a value channel: ungated full-range histogram, threshold 255.
pub fn baseline_value(v: &PlanarImage, cfg: &EnhanceConfig) -> Result<(MappingCurve, PlanarImage)> {
    v.expect_space(ColorSpace::Gray, "baseline_value")?;
    cfg.validate()?;
    let hist = plain_histogram(v, 255)?;
    let curve = design_agcwd(&hist, cfg.alpha, 255)?;
    let out = apply_curve(v, &curve)?;
    Ok((curve, out))
}

fn value_plane(hsv: &PlanarImage) -> PlanarImage {
    PlanarImage::from_parts_unchecked(hsv.width(), hsv.height(), ColorSpace::Gray, vec![hsv.plane(2).to_vec()])
}

/// Enhances an HSV image. Only the V plane is replaced; H and S are
/// carried over untouched.
pub fn enhance_hsv(hsv: &PlanarImage, cfg: &EnhanceConfig) -> Result<(PlanarImage, EnhanceReport)> {
    hsv.expect_space(ColorSpace::Hsv, "enhance_hsv")?;
    let v = value_plane(hsv);
    match cfg.mode {
        Mode::Proposed => {
            let (layers, report) = enhance_value(&v, cfg)?;
            let out = hsv.clone().with_plane(2, layers.value.into_planes().remove(0))?;
            Ok((out, report))
        }
        Mode::AgcwdPlain => {
            let start = Instant::now();
            let (_, value) = baseline_value(&v, cfg)?;
            let out = hsv.clone().with_plane(2, value.into_planes().remove(0))?;
            let codes: Vec<f64> = v.plane(0).iter().map(|x| x * 255.0).collect();
            let report = EnhanceReport {
                threshold: ThresholdReport {
                    percentile_value: percentile_of(&codes, cfg.percentile),
                    h_count: 0,
                    threshold_bin: 255,
                },
                s_count: v.plane(0).iter().filter(|&&x| crate::image::bin_of(x) < 255).count(),
                histogram_fallback: false,
                residual: 0.0,
                iterations: 0,
                timings: StageTimings {
                    total: millis(start),
                    ..Default::default()
                },
            };
            Ok((out, report))
        }
    }
}

/// Enhances an RGB image according to `cfg.mode`.
pub fn enhance(img: &PlanarImage, cfg: &EnhanceConfig) -> Result<(PlanarImage, EnhanceReport)> {
    img.expect_space(ColorSpace::Rgb, "enhance")?;
    let start = Instant::now();
    let hsv = rgb_to_hsv(img)?;
    let (out, mut report) = enhance_hsv(&hsv, cfg)?;
    let t = Instant::now();
    let rgb = hsv_to_rgb(&out)?;
    report.timings.apply += millis(t);
    report.timings.total = millis(start);
    Ok((rgb, report))
}

/// Plain full-range AGCWD applied to the V channel, for comparison.
pub fn enhance_baseline_agcwd(img: &PlanarImage, cfg: &EnhanceConfig) -> Result<PlanarImage> {
    let cfg = EnhanceConfig {
        mode: Mode::AgcwdPlain,
        ..*cfg
    };
    enhance(img, &cfg).map(|(out, _)| out)
}
