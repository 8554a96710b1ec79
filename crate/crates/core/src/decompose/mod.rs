//! Retinex decomposition of the value channel into a smooth illumination
//! layer and a reflectance layer carrying texture and noise.
//!
//! The illumination solves the edge-aware quadratic problem
//!
//! ```text
//! minimize  |I - V|^2 + lambda * sum_e w_e (D I)_e^2
//! w_e = 1 / (|D log(V + 1e-3)|_e + epsilon)
//! ```
//!
//! i.e. `(Id + lambda D^T W D) I = V`, by conjugate gradient. The result is
//! clamped to `max(I, V, 1e-4)` and the reflectance is `V / I` so that
//! `I * R` reproduces `V`.

mod cg;
mod system;

pub use cg::{conjugate_gradient, CgOutcome};
pub use system::{Diagonal, Identity, LinearOperator, SmoothnessSystem};

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};

/// Offset inside the logarithm used for edge weights.
pub const LOG_OFFSET: f64 = 1e-3;

/// Lower bound on the illumination, so the reflectance division stays finite.
pub const ILLUMINATION_FLOOR: f64 = 1e-4;

/// Tunables of the illumination solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Smoothness weight.
    pub lambda: f64,
    /// Floor added to gradient magnitudes before inverting them into weights.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Relative residual `|b - Ax| / |b|` at which CG stops.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            epsilon: 1e-3,
            max_iters: 500,
            tolerance: 1e-5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        // lambda = 0 is admitted: it degenerates to A = Id.
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::param("tolerance", format!("must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

/// Illumination and reflectance layers of a value channel.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub illumination: PlanarImage,
    pub reflectance: PlanarImage,
    /// Relative residual reached by the solver.
    pub residual: f64,
    pub iterations: usize,
}

impl Decomposition {
    /// `I * R`, which reproduces the decomposed channel.
    pub fn recombine(&self) -> Vec<f64> {
        self.illumination
            .plane(0)
            .iter()
            .zip(self.reflectance.plane(0))
            .map(|(i, r)| i * r)
            .collect()
    }
}

/// Edge weight from two neighbouring samples.
pub fn edge_weight(a: f64, b: f64, epsilon: f64) -> f64 {
    1.0 / (((a + LOG_OFFSET).ln() - (b + LOG_OFFSET).ln()).abs() + epsilon)
}

/// Builds the illumination system for a gray image.
pub fn assemble_system(v: &PlanarImage, cfg: &SolverConfig) -> Result<SmoothnessSystem> {
    v.expect_space(ColorSpace::Gray, "decompose")?;
    cfg.validate()?;
    let (w, h) = (v.width(), v.height());
    let data = v.plane(0);
    let mut horizontal = Vec::with_capacity((w - 1) * h);
    for y in 0..h {
        for x in 0..w - 1 {
            horizontal.push(edge_weight(data[y * w + x], data[y * w + x + 1], cfg.epsilon));
        }
    }
    let mut vertical = Vec::with_capacity(w * (h - 1));
    for y in 0..h - 1 {
        for x in 0..w {
            vertical.push(edge_weight(data[y * w + x], data[(y + 1) * w + x], cfg.epsilon));
        }
    }
    Ok(SmoothnessSystem {
        width: w,
        height: h,
        lambda: cfg.lambda,
        horizontal,
        vertical,
        rhs: data.to_vec(),
    })
}

/// Runs CG on `op` with the configured stopping rule, warm-started from `rhs`.
///
/// The smoothness operator is a perturbation of the identity, so the
/// right-hand side is already a good first iterate.
pub fn solve_cg<A: LinearOperator + ?Sized>(op: &A, rhs: &[f64], cfg: &SolverConfig) -> Result<CgOutcome> {
    let out = conjugate_gradient(op, rhs, rhs, cfg.tolerance, cfg.max_iters);
    if out.converged {
        Ok(out)
    } else {
        Err(Error::NotConverged {
            residual: out.residual,
            iterations: out.iterations,
            report: None,
        })
    }
}

/// Decomposes `v` into illumination and reflectance.
///
/// Fails with [`Error::NotConverged`] when the solver misses its tolerance;
/// [`decompose_best_effort`] returns the partial result instead.
pub fn decompose(v: &PlanarImage, cfg: &SolverConfig) -> Result<Decomposition> {
    let d = decompose_best_effort(v, cfg)?;
    if d.residual <= cfg.tolerance {
        Ok(d)
    } else {
        Err(Error::NotConverged {
            residual: d.residual,
            iterations: d.iterations,
            report: None,
        })
    }
}

/// Like [`decompose`], but keeps whatever iterate the solver reached.
pub fn decompose_best_effort(v: &PlanarImage, cfg: &SolverConfig) -> Result<Decomposition> {
    let system = assemble_system(v, cfg)?;
    let out = conjugate_gradient(&system, &system.rhs, &system.rhs, cfg.tolerance, cfg.max_iters);
    Ok(split_layers(v, out.solution, out.residual, out.iterations))
}

fn split_layers(v: &PlanarImage, raw: Vec<f64>, residual: f64, iterations: usize) -> Decomposition {
    let data = v.plane(0);
    let illumination: Vec<f64> = raw
        .iter()
        .zip(data)
        .map(|(&i, &v)| i.max(v).clamp(ILLUMINATION_FLOOR, 1.0))
        .collect();
    let reflectance: Vec<f64> = data
        .iter()
        .zip(&illumination)
        .map(|(v, i)| (v / i).clamp(0.0, 1.0))
        .collect();
    let (w, h) = (v.width(), v.height());
    Decomposition {
        illumination: PlanarImage::from_parts_unchecked(w, h, ColorSpace::Gray, vec![illumination]),
        reflectance: PlanarImage::from_parts_unchecked(w, h, ColorSpace::Gray, vec![reflectance]),
        residual,
        iterations,
    }
}

/// Anisotropic total variation: sum of absolute forward differences.
pub fn total_variation(img: &PlanarImage) -> f64 {
    let (w, h) = (img.width(), img.height());
    let d = img.plane(0);
    let mut tv = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                tv += (d[i + 1] - d[i]).abs();
            }
            if y + 1 < h {
                tv += (d[i + w] - d[i]).abs();
            }
        }
    }
    tv
}

#[cfg(test)]
mod tests;
