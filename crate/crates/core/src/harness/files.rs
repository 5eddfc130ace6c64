//! On-disk formats: the multi-channel complex k-space container and
//! grayscale images.
//!
//! K-space layout: 16-byte header (`b"FCSK"`, u32 `N`, u32 channel count,
//! u32 reserved = 0, all little-endian) followed by each channel in turn as
//! `N * N` row-major `(re, im)` pairs of little-endian f64.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{FcsError, Result};
use crate::geometry::GridGeometry;
use crate::grid::KSpace;

pub const KSPACE_MAGIC: &[u8; 4] = b"FCSK";
const HEADER_LEN: usize = 16;

pub fn encode_kspace(channels: &[KSpace]) -> Result<Vec<u8>> {
    let first = channels
        .first()
        .ok_or_else(|| FcsError::InvalidParameter("no k-space channels to write".into()))?;
    let n = first.size();
    if let Some(bad) = channels.iter().find(|c| c.size() != n) {
        return Err(crate::error::mismatch(n, bad.size()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + channels.len() * n * n * 16);
    out.extend_from_slice(KSPACE_MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(channels.len() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for ch in channels {
        for v in ch.coefficients() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_kspace(bytes: &[u8]) -> Result<Vec<KSpace>> {
    let bad = |why: &str| FcsError::Parse(format!("k-space file: {why}"));
    if bytes.len() < HEADER_LEN || &bytes[..4] != KSPACE_MAGIC {
        return Err(bad("missing FCSK header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (n, count) = (word(4), word(8));
    if count == 0 {
        return Err(bad("zero channels"));
    }
    let per = n
        .checked_mul(n)
        .and_then(|v| v.checked_mul(16))
        .ok_or_else(|| bad("size overflow"))?;
    if bytes.len() != HEADER_LEN + per * count {
        return Err(bad(&format!(
            "expected {} payload bytes for N={n} x {count} channels, found {}",
            per * count,
            bytes.len() - HEADER_LEN
        )));
    }
    let geometry = GridGeometry::new(n)?;
    let f = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    (0..count)
        .map(|c| {
            let base = HEADER_LEN + c * per;
            let coeffs = Array2::from_shape_fn((n, n), |(u, v)| {
                let at = base + (u * n + v) * 16;
                Complex64::new(f(at), f(at + 8))
            });
            KSpace::new(geometry, coeffs)
        })
        .collect()
}

pub fn write_kspace(path: &Path, channels: &[KSpace]) -> Result<()> {
    fs::write(path, encode_kspace(channels)?)?;
    Ok(())
}

pub fn read_kspace(path: &Path) -> Result<Vec<KSpace>> {
    decode_kspace(&fs::read(path)?)
}

/// Reads a grayscale (or colour, converted to luma) PNG/PGM. 8-bit data
/// keeps its values; 16-bit data is rescaled so both span `[0, 255]`.
pub fn read_image(path: &Path) -> Result<Array2<f64>> {
    let img = image::open(path)?;
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    let (w, h) = (img.width() as usize, img.height() as usize);
    if sixteen {
        let luma = img.to_luma16();
        Ok(Array2::from_shape_fn((h, w), |(r, c)| {
            luma.get_pixel(c as u32, r as u32)[0] as f64 * 255.0 / 65535.0
        }))
    } else {
        let luma = img.to_luma8();
        Ok(Array2::from_shape_fn((h, w), |(r, c)| {
            luma.get_pixel(c as u32, r as u32)[0] as f64
        }))
    }
}

/// Quantises to 8 bits (clamped to `[0, 255]`, rounded) in row-major order.
pub fn quantize(pixels: &Array2<f64>) -> Vec<u8> {
    pixels
        .iter()
        .map(|&v| {
            if v.is_finite() {
                v.clamp(0.0, 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Writes an 8-bit grayscale PNG, or binary PGM when the extension is
/// `.pgm`. The PNG encoder settings are fixed so output bytes are stable.
pub fn write_image(path: &Path, pixels: &Array2<f64>) -> Result<()> {
    let (h, w) = pixels.dim();
    let data = quantize(pixels);
    let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Png);
    match format {
        ImageFormat::Pnm => {
            let mut f = BufWriter::new(fs::File::create(path)?);
            write!(f, "P5\n{w} {h}\n255\n")?;
            f.write_all(&data)?;
            f.flush()?;
        }
        _ => {
            let f = BufWriter::new(fs::File::create(path)?);
            PngEncoder::new_with_quality(f, CompressionType::Default, FilterType::Adaptive)
                .write_image(&data, w as u32, h as u32, ExtendedColorType::L8)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_complex_image;

    #[test]
    fn kspace_round_trip_is_bit_exact() {
        let chans: Vec<KSpace> = (0..3)
            .map(|s| random_complex_image(9, s).to_kspace())
            .collect();
        let bytes = encode_kspace(&chans).unwrap();
        assert_eq!(&bytes[..4], b"FCSK");
        assert_eq!(bytes.len(), 16 + 3 * 81 * 16);
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 9);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        let back = decode_kspace(&bytes).unwrap();
        assert_eq!(back, chans);
        // first coefficient is stored re then im
        let c0 = chans[0].coefficients()[[0, 0]];
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), c0.re);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), c0.im);
    }

    #[test]
    fn kspace_rejects_corrupt_input() {
        let bytes = encode_kspace(&[random_complex_image(5, 1).to_kspace()]).unwrap();
        assert!(decode_kspace(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(decode_kspace(&wrong).is_err());
        assert!(encode_kspace(&[]).is_err());
    }

    #[test]
    fn images_round_trip_through_png_and_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let img = Array2::from_shape_fn((5, 7), |(r, c)| (r * 40 + c * 3) as f64);
        for name in ["a.png", "a.pgm"] {
            let path = dir.path().join(name);
            write_image(&path, &img).unwrap();
            let back = read_image(&path).unwrap();
            assert_eq!(back, img, "{name}");
            let first = fs::read(&path).unwrap();
            write_image(&path, &img).unwrap();
            assert_eq!(fs::read(&path).unwrap(), first);
        }
    }

    #[test]
    fn sixteen_bit_input_is_rescaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.png");
        let buf =
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 1, vec![0u16, 65535]).unwrap();
        buf.save(&path).unwrap();
        let back = read_image(&path).unwrap();
        assert_eq!(back.row(0).to_vec(), vec![0.0, 255.0]);
    }

    #[test]
    fn quantize_clamps() {
        let a = Array2::from_shape_vec((1, 4), vec![-3.0, 12.4, 300.0, f64::NAN]).unwrap();
        assert_eq!(quantize(&a), vec![0, 12, 255, 0]);
    }
}
