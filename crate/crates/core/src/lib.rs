//! Noise-aware shadow-up contrast enhancement for low-light images.
//!
//! The value channel of an image is split into a smooth illumination layer
//! and a reflectance layer (Retinex). Only the illumination is remapped, by
//! a tone curve that
//!
//! - is the identity above an adaptive threshold derived from the bright
//!   tail of the image, so highlights keep their detail, and
//! - below it, follows an AGCWD gamma curve designed from a histogram that
//!   only counts pixels whose local contrast exceeds the expected noise
//!   level, so flat noisy shadows do not drive the enhancement.
//!
//! The remapped illumination is multiplied back with the reflectance and the
//! image is returned to RGB with hue and saturation untouched.
//!
//! ```
//! use shadowup::{enhance, EnhanceConfig, PlanarImage, ColorSpace};
//!
//! let img = PlanarImage::filled(16, 16, ColorSpace::Rgb, 0.2).unwrap();
//! let (out, report) = enhance(&img, &EnhanceConfig::default()).unwrap();
//! assert_eq!(out.width(), 16);
//! assert!(report.threshold.threshold_bin <= 255);
//! ```

pub mod color;
pub mod curve;
pub mod decompose;
pub mod error;
pub mod eval;
pub mod filter;
pub mod image;
pub mod io;
pub mod noise;
pub mod pipeline;

pub use color::{hsv_to_rgb, rgb_to_hsv};
pub use curve::{apply_curve, compute_threshold, design_agcwd, export_curve, MappingCurve, ThresholdReport};
pub use decompose::{assemble_system, decompose, solve_cg, Decomposition, SolverConfig};
pub use error::{Error, Result};
pub use filter::gaussian_filter;
pub use image::{ColorSpace, PlanarImage};
pub use io::{load_image, save_image};
pub use noise::{local_contrast, noise_aware_histogram, NoiseAwareHistogram, NoiseLevelFunction};
pub use pipeline::{
    enhance, enhance_baseline_agcwd, enhance_hsv, enhance_value, ContrastSource, EnhanceConfig, EnhanceReport, Mode,
};
