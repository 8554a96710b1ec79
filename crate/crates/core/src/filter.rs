//! Separable Gaussian smoothing with half-sample symmetric borders.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{clamp_unit, ColorSpace, PlanarImage};

/// Normalized 1-D Gaussian taps of radius `ceil(3 * sigma)`, centre at index `radius`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be positive and finite, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius).map(|k| (-((k * k) as f64) / denom).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Maps an out-of-range index onto `[0, n)` by mirroring about the border
/// (`d c b a | a b c d | d c b a`). Works for any offset, so kernels wider
/// than the image fold back repeatedly.
pub(crate) fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

/// Smooths a single-channel image with a Gaussian of standard deviation `sigma` pixels.
///
/// The symmetric border extension makes the filter mass-preserving: the output
/// mean equals the input mean up to rounding.
pub fn gaussian_filter(img: &PlanarImage, sigma: f64) -> Result<PlanarImage> {
    img.expect_space(ColorSpace::Gray, "gaussian_filter")?;
    let kernel = gaussian_kernel(sigma)?;
    let mut out = gaussian_plane(img.plane(0), img.width(), img.height(), &kernel);
    out.iter_mut().for_each(|v| *v = clamp_unit(*v));
    Ok(PlanarImage::from_parts_unchecked(img.width(), img.height(), ColorSpace::Gray, vec![out]))
}

/// Filters a raw plane without range checks. Used for moments such as `l^2`.
pub(crate) fn gaussian_plane(data: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;

    let mut rows = vec![0.0; data.len()];
    rows.par_chunks_mut(width).enumerate().for_each(|(y, out)| {
        let src = &data[y * width..(y + 1) * width];
        for (x, o) in out.iter_mut().enumerate() {
            *o = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[reflect(x as i64 + k as i64 - radius, width)])
                .sum();
        }
    });

    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, out)| {
        for (k, w) in kernel.iter().enumerate() {
            let sy = reflect(y as i64 + k as i64 - radius, height);
            let src = &rows[sy * width..(sy + 1) * width];
            for (o, s) in out.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn kernel_shape() {
        let k = gaussian_kernel(1.0).unwrap();
        assert_eq!(k.len(), 7);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(gaussian_kernel(3.0).unwrap().len(), 19);
        assert_eq!(gaussian_kernel(0.2).unwrap().len(), 3);
        assert!(gaussian_kernel(0.0).is_err());
        assert!(gaussian_kernel(-1.0).is_err());
        assert!(gaussian_kernel(f64::NAN).is_err());
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-5..9).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0]);
        assert_eq!(reflect(-1, 1), 0);
        assert_eq!(reflect(7, 1), 0);
    }

    #[test]
    fn constant_is_preserved() {
        let img = PlanarImage::filled(9, 5, ColorSpace::Gray, 0.37).unwrap();
        let out = gaussian_filter(&img, 3.0).unwrap();
        assert!(out.plane(0).iter().all(|v| (v - 0.37).abs() < 1e-14));
    }

    #[test]
    fn impulse_response_matches_kernel_weight() {
        // independent 2-D weight at the origin for sigma = 1
        let taps: Vec<f64> = (-3i32..=3).map(|k| (-(k * k) as f64 / 2.0).exp()).collect();
        let w0 = 1.0 / taps.iter().sum::<f64>();
        let mut data = vec![0.0; 21 * 21];
        data[10 * 21 + 10] = 1.0;
        let img = PlanarImage::gray(21, 21, data).unwrap();
        let out = gaussian_filter(&img, 1.0).unwrap();
        assert!((out.get(0, 10, 10) - w0 * w0).abs() < 1e-15);
        assert!((out.get(0, 11, 10) - w0 * w0 * (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_sigma_and_color_images() {
        let img = PlanarImage::filled(4, 4, ColorSpace::Gray, 0.5).unwrap();
        assert!(matches!(gaussian_filter(&img, 0.0), Err(Error::InvalidParameter { .. })));
        let rgb = PlanarImage::filled(4, 4, ColorSpace::Rgb, 0.5).unwrap();
        assert!(gaussian_filter(&rgb, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn mass_is_conserved(w in 1usize..20, h in 1usize..20, sigma in 0.3..6.0f64, seed in proptest::collection::vec(0.0..=1.0f64, 400)) {
            let img = PlanarImage::gray(w, h, seed[..w * h].to_vec()).unwrap();
            let out = gaussian_filter(&img, sigma).unwrap();
            prop_assert!((mean(out.plane(0)) - mean(img.plane(0))).abs() < 1e-6);
            prop_assert!(out.plane(0).iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn linear(a in 0.0..=1.0f64, sigma in 0.5..4.0f64, xs in proptest::collection::vec(0.0..=1.0f64, 96), ys in proptest::collection::vec(0.0..=1.0f64, 96)) {
            let b = 1.0 - a;
            let k = gaussian_kernel(sigma).unwrap();
            let mix: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let fx = gaussian_plane(&xs, 12, 8, &k);
            let fy = gaussian_plane(&ys, 12, 8, &k);
            let fm = gaussian_plane(&mix, 12, 8, &k);
            for i in 0..96 {
                prop_assert!((fm[i] - (a * fx[i] + b * fy[i])).abs() < 1e-6);
            }
        }
    }
}
