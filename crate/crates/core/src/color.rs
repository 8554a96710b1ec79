//! Hexcone RGB <-> HSV conversion with hue scaled to `[0, 1)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{clamp_unit, ColorSpace, PlanarImage};

/// Converts one RGB triple to `(h, s, v)`. `v` is exactly `max(r, g, b)`.
pub fn rgb_to_hsv_pixel(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let v = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = v - min;
    let s = if v > 0.0 { delta / v } else { 0.0 };
    if delta <= 0.0 {
        return (0.0, s, v);
    }
    let sector = if r == v {
        ((g - b) / delta).rem_euclid(6.0)
    } else if g == v {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut h = sector / 6.0;
    if h >= 1.0 {
        h = 0.0;
    }
    (h, s, v)
}

/// Inverse of [`rgb_to_hsv_pixel`]; the result is clamped to `[0, 1]`.
pub fn hsv_to_rgb_pixel(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        let v = clamp_unit(v);
        return (v, v, v);
    }
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    (clamp_unit(r), clamp_unit(g), clamp_unit(b))
}

/// Converts an RGB image to HSV.
pub fn rgb_to_hsv(img: &PlanarImage) -> Result<PlanarImage> {
    img.expect_space(ColorSpace::Rgb, "rgb_to_hsv")?;
    convert(img, ColorSpace::Hsv, rgb_to_hsv_pixel)
}

/// Converts an HSV image back to RGB.
pub fn hsv_to_rgb(img: &PlanarImage) -> Result<PlanarImage> {
    img.expect_space(ColorSpace::Hsv, "hsv_to_rgb")?;
    convert(img, ColorSpace::Rgb, hsv_to_rgb_pixel)
}

fn convert(img: &PlanarImage, to: ColorSpace, f: fn(f64, f64, f64) -> (f64, f64, f64)) -> Result<PlanarImage> {
    if img.channels() != 3 {
        return Err(Error::InvalidInput(format!("expected 3 channels, got {}", img.channels())));
    }
    let (a, b, c) = (img.plane(0), img.plane(1), img.plane(2));
    let pixels: Vec<(f64, f64, f64)> = (0..img.len())
        .into_par_iter()
        .map(|i| f(a[i], b[i], c[i]))
        .collect();
    let mut planes: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(img.len())).collect();
    for (x, y, z) in pixels {
        planes[0].push(x);
        planes[1].push(y);
        planes[2].push(z);
    }
    Ok(PlanarImage::from_parts_unchecked(img.width(), img.height(), to, planes))
}
