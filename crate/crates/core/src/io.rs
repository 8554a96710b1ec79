//! 8-bit PNG and binary PPM/PGM reading and writing.
//!
//! Codes map to samples by `v / 255`; samples map back to codes by
//! `round(v * 255)` clamped to `[0, 255]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Sample to 8-bit code.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// 8-bit code to sample.
pub fn dequantize(code: u8) -> f64 {
    code as f64 / 255.0
}

/// Reads an 8-bit image from a PNG or binary PPM (P6) or PGM (P5) file.
///
/// The format is detected from the file contents, not the extension. Gray
/// files are expanded to RGB.
pub fn load_image(path: impl AsRef<Path>) -> Result<PlanarImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|reason| Error::io(path, reason))
}

/// Decodes PNG, P6 or P5 bytes into an RGB image.
pub fn decode_image(bytes: &[u8]) -> std::result::Result<PlanarImage, String> {
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        let (w, h, data) = decode_pnm(bytes, b"P6", 3)?;
        Ok(from_interleaved(w, h, ColorSpace::Rgb, &data))
    } else if bytes.starts_with(b"P5") {
        let (w, h, data) = decode_pnm(bytes, b"P5", 1)?;
        let gray: Vec<u8> = data.iter().flat_map(|&b| [b; 3]).collect();
        Ok(from_interleaved(w, h, ColorSpace::Rgb, &gray))
    } else {
        Err("unsupported format (expected PNG, binary PPM or binary PGM)".into())
    }
}

fn decode_png(bytes: &[u8]) -> std::result::Result<PlanarImage, String> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| e.to_string())?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(from_interleaved(w as usize, h as usize, ColorSpace::Rgb, rgb.as_raw()))
}

fn from_interleaved(width: usize, height: usize, space: ColorSpace, data: &[u8]) -> PlanarImage {
    let n = space.channels();
    let planes = (0..n)
        .map(|c| data.iter().skip(c).step_by(n).map(|&b| dequantize(b)).collect())
        .collect();
    PlanarImage::from_parts_unchecked(width, height, space, planes)
}

fn to_interleaved(img: &PlanarImage) -> Vec<u8> {
    let n = img.channels();
    let mut out = Vec::with_capacity(img.len() * n);
    for i in 0..img.len() {
        for c in 0..n {
            out.push(quantize(img.plane(c)[i]));
        }
    }
    out
}

/// Parses a binary PNM header and returns `(width, height, samples)`.
fn decode_pnm(bytes: &[u8], magic: &[u8], channels: usize) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut pos = magic.len();
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while !matches!(bytes.get(pos), None | Some(b'\n')) {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err("malformed header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| "header value out of range".to_string())?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval} (only 8-bit files are supported)"));
    }
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err("malformed header".into());
    }
    pos += 1;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or("image too large")?;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(format!("truncated data: expected {need} bytes, found {}", raster.len()));
    }
    Ok((width, height, raster[..need].to_vec()))
}

/// Writes an image, choosing the format from the extension.
///
/// `.png` writes PNG (RGB or gray), `.ppm` writes P6 and `.pgm` writes P5.
/// HSV images are rejected.
pub fn save_image(img: &PlanarImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if img.space() == ColorSpace::Hsv {
        return Err(Error::InvalidInput("cannot save an HSV image; convert to RGB first".into()));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let bytes = match (ext.as_str(), img.space()) {
        ("png", _) => encode_png(img).map_err(|e| Error::io(path, e))?,
        ("ppm", ColorSpace::Rgb) | ("pgm", ColorSpace::Gray) => encode_pnm(img),
        ("ppm", _) | ("pgm", _) => {
            return Err(Error::io(
                path,
                format!("extension .{ext} does not match a {:?} image", img.space()),
            ))
        }
        _ => return Err(Error::io(path, "unsupported extension (expected .png, .ppm or .pgm)")),
    };
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Binary PNM encoding: P6 for RGB, P5 for gray.
pub fn encode_pnm(img: &PlanarImage) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(to_interleaved(img));
    out
}

fn encode_png(img: &PlanarImage) -> std::result::Result<Vec<u8>, String> {
    let color = if img.channels() == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    let mut out = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut out);
    image::ImageEncoder::write_image(
        encoder,
        &to_interleaved(img),
        img.width() as u32,
        img.height() as u32,
        color,
    )
    .map_err(|e| e.to_string())?;
    Ok(out)
}
