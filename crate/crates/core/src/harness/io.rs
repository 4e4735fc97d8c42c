//! 8-bit grayscale PGM/PNG input and output.

use std::path::Path;

use image::{GrayImage, ImageFormat, Luma};

use crate::error::{Error, Result};
use crate::grid::ImagePlane;

fn image_error(path: &Path, message: impl ToString) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn format_of(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(image_error(
            path,
            "unsupported format, expected .png or .pgm",
        )),
    }
}

/// Loads a grayscale image. Non-square inputs are center-cropped to a square.
pub fn load_image(path: &Path) -> Result<ImagePlane> {
    let format = format_of(path)?;
    let bytes = std::fs::read(path)?;
    let decoded =
        image::load_from_memory_with_format(&bytes, format).map_err(|e| image_error(path, e))?;
    let gray = decoded.to_luma8();
    let (w, h) = gray.dimensions();
    let side = w.min(h);
    let (x0, y0) = ((w - side) / 2, (h - side) / 2);
    ImagePlane::new(
        side as usize,
        (0..side * side)
            .map(|i| gray.get_pixel(x0 + i % side, y0 + i / side)[0] as f64)
            .collect(),
    )
    .map_err(|e| image_error(path, e))
}

/// Loads and bilinearly resizes to `side`.
pub fn load_image_resized(path: &Path, side: usize) -> Result<ImagePlane> {
    let x = load_image(path)?;
    Ok(if x.side() == side {
        x
    } else {
        resize_bilinear(&x, side)
    })
}

/// Clips to `[0, 255]`, rounds to the nearest integer and writes PNG or PGM
/// depending on the extension.
pub fn save_image(x: &ImagePlane, path: &Path) -> Result<()> {
    let format = format_of(path)?;
    let side = x.side() as u32;
    let img = GrayImage::from_fn(side, side, |c, r| {
        Luma([x.get(r as usize, c as usize).clamp(0.0, 255.0).round() as u8])
    });
    img.save_with_format(path, format)
        .map_err(|e| image_error(path, e))
}

/// Bilinear resampling with pixel-centre alignment:
/// output pixel `i` samples input coordinate `(i + ½)·(in/out) − ½`.
pub fn resize_bilinear(x: &ImagePlane, side: usize) -> ImagePlane {
    let src = x.side();
    let ratio = src as f64 / side as f64;
    let coord = |i: usize| {
        let p = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
        let lo = p.floor() as usize;
        let hi = (lo + 1).min(src - 1);
        (lo, hi, p - lo as f64)
    };
    ImagePlane::from_fn(side, |r, c| {
        let (r0, r1, fr) = coord(r);
        let (c0, c1, fc) = coord(c);
        let top = x.get(r0, c0) * (1.0 - fc) + x.get(r0, c1) * fc;
        let bottom = x.get(r1, c0) * (1.0 - fc) + x.get(r1, c1) * fc;
        top * (1.0 - fr) + bottom * fr
    })
}
