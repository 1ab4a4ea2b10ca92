//! Image file I/O: self-contained binary PPM (P6) and PNG via the `image`
//! codec. Samples are quantized to 8 bits with round-half-away-from-zero on
//! write and mapped back to `v/255` on read.

use super::{ImageError, ImageF};
use crate::scalar::Scalar;
use std::fs;
use std::io::Write as _;
use std::path::Path;

/// Quantizes a unit-range sample to its 8-bit code.
#[inline]
pub fn quantize8<T: Scalar>(v: T) -> u8 {
    let q = (v.as_f64() * 255.0).round();
    q.clamp(0.0, 255.0) as u8
}

fn io_err(path: &Path, source: std::io::Error) -> ImageError {
    ImageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn decode_err(path: &Path, reason: impl Into<String>) -> ImageError {
    ImageError::Decode {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Encodes a 3-channel image as binary PPM: `P6\n{w} {h}\n255\n` followed by
/// interleaved RGB bytes.
pub fn encode_ppm<T: Scalar>(img: &ImageF<T>) -> Result<Vec<u8>, ImageError> {
    if img.channels() != 3 {
        return Err(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        });
    }
    let mut out = Vec::with_capacity(20 + img.height() * img.width() * 3);
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height()).expect("vec write");
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..3 {
                out.push(quantize8(img.get(y, x, c)));
            }
        }
    }
    Ok(out)
}

/// Writes a 3-channel image as binary PPM.
pub fn save_ppm<T: Scalar>(img: &ImageF<T>, path: &Path) -> Result<(), ImageError> {
    let bytes = encode_ppm(img)?;
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Decodes a binary PPM with `maxval` 255.
pub fn decode_ppm<T: Scalar>(bytes: &[u8], path: &Path) -> Result<ImageF<T>, ImageError> {
    let mut pos;

    fn skip_space(bytes: &[u8], pos: &mut usize) {
        while *pos < bytes.len() {
            match bytes[*pos] {
                b' ' | b'\t' | b'\r' | b'\n' => *pos += 1,
                b'#' => {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn read_number(bytes: &[u8], pos: &mut usize) -> Option<usize> {
        skip_space(bytes, pos);
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if *pos == start {
            return None;
        }
        std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
    }

    if bytes.len() < 2 || &bytes[0..2] != b"P6" {
        return Err(decode_err(path, "not a binary PPM (missing P6 magic)"));
    }
    pos = 2;
    let width =
        read_number(bytes, &mut pos).ok_or_else(|| decode_err(path, "missing width"))?;
    let height =
        read_number(bytes, &mut pos).ok_or_else(|| decode_err(path, "missing height"))?;
    let maxval =
        read_number(bytes, &mut pos).ok_or_else(|| decode_err(path, "missing maxval"))?;
    if maxval != 255 {
        return Err(decode_err(path, format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(decode_err(path, "malformed header/raster separator"));
    }
    pos += 1;
    let need = height * width * 3;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(decode_err(
            path,
            format!("raster truncated: need {need} bytes, have {}", raster.len()),
        ));
    }
    let inv = 1.0 / 255.0;
    let data = raster[..need]
        .iter()
        .map(|&b| T::of(f64::from(b) * inv))
        .collect();
    ImageF::new(height, width, 3, data)
}

/// Reads a binary PPM file.
pub fn load_ppm<T: Scalar>(path: &Path) -> Result<ImageF<T>, ImageError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode_ppm(&bytes, path)
}

/// Writes PNG: 3-channel images as RGB8, grayscale as L8.
pub fn save_png<T: Scalar>(img: &ImageF<T>, path: &Path) -> Result<(), ImageError> {
    let w = img.width() as u32;
    let h = img.height() as u32;
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize8(v)).collect();
    let dynamic = match img.channels() {
        3 => image::DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, bytes).expect("sized buffer"),
        ),
        _ => image::DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, bytes).expect("sized buffer"),
        ),
    };
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| decode_err(path, format!("png encode: {e}")))
}

/// Reads PNG; grayscale stays single-channel, everything else converts to RGB.
pub fn load_png<T: Scalar>(path: &Path) -> Result<ImageF<T>, ImageError> {
    let dynamic = image::open(path).map_err(|e| decode_err(path, format!("png decode: {e}")))?;
    let inv = 1.0 / 255.0;
    match dynamic {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let data = g.into_raw().iter().map(|&b| T::of(f64::from(b) * inv)).collect();
            ImageF::new(h, w, 1, data)
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let data = rgb
                .into_raw()
                .iter()
                .map(|&b| T::of(f64::from(b) * inv))
                .collect();
            ImageF::new(h, w, 3, data)
        }
    }
}

/// Loads an image, dispatching on the file extension (`.png`, `.ppm`).
pub fn load_image<T: Scalar>(path: &Path) -> Result<ImageF<T>, ImageError> {
    match extension_of(path) {
        Some("ppm") => load_ppm(path),
        Some("png") => load_png(path),
        _ => Err(decode_err(path, "unsupported extension (expected .png or .ppm)")),
    }
}

/// Saves an image, dispatching on the file extension (`.png`, `.ppm`).
pub fn save_image<T: Scalar>(img: &ImageF<T>, path: &Path) -> Result<(), ImageError> {
    match extension_of(path) {
        Some("ppm") => save_ppm(img, path),
        Some("png") => save_png(img, path),
        _ => Err(decode_err(path, "unsupported extension (expected .png or .ppm)")),
    }
}

fn extension_of(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}
