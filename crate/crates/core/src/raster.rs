//! In-memory rasters and their on-disk encodings.
//!
//! All rasters are row-major: pixel `(row, col)` lives at `row * width + col`.
//! Probability rasters are exchanged as 16-bit single-channel PNG with
//! `v16 = round(v * 65535)`; binary rasters as 8-bit PNG with 0/255 values.

use std::io::ErrorKind;
use std::path::Path;

use image::{ImageBuffer, ImageError, ImageFormat, ImageReader, Luma, Rgb};

use crate::error::{Error, Result};

/// Quantisation levels used for stored probability rasters.
pub const PROB_LEVELS: f64 = 65535.0;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(len) {
        return Err(Error::Dimensions { width, height, len });
    }
    Ok(())
}

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }
}

/// Per-pixel boolean raster (centreline masks, binarised predictions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryRaster {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pixelwise complement.
    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

/// Unit-interval raster. Every value is finite and within `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbRaster {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ProbRaster {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutOfRange { index, value });
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Maps every value through `f`, rejecting results outside `[0, 1]`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.width, self.height, self.values.iter().map(|&v| f(v)).collect())
    }
}

fn decode(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: "unrecognised image signature".into(),
        });
    }
    reader.decode().map_err(|e| map_image_error(path, e))
}

fn map_image_error(path: &Path, err: ImageError) -> Error {
    let path = path.to_path_buf();
    match err {
        ImageError::Unsupported(e) => Error::UnsupportedFormat { path, reason: e.to_string() },
        ImageError::IoError(e) if e.kind() == ErrorKind::NotFound => Error::MissingFile(path),
        ImageError::IoError(e)
            if matches!(e.kind(), ErrorKind::UnexpectedEof | ErrorKind::InvalidData) =>
        {
            Error::CorruptImage { path, reason: e.to_string() }
        }
        ImageError::IoError(e) => Error::Io { path, source: e },
        other => Error::CorruptImage { path, reason: other.to_string() },
    }
}

fn encode_err(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) => Error::io(path, e),
        other => Error::io(path, std::io::Error::other(other.to_string())),
    }
}

/// Decodes an 8-bit RGB image (PNG or JPEG). Other colour types are converted.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbRaster> {
    let path = path.as_ref();
    let img = decode(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = img.pixels().map(|p| p.0).collect();
    RgbRaster::new(w, h, pixels)
}

/// Writes an RGB raster as PNG.
pub fn save_rgb(r: &RgbRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = r.pixels.iter().flatten().copied().collect();
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(r.width as u32, r.height as u32, raw).expect("buffer size");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// Writes a binary raster as an 8-bit grayscale PNG (true = 255).
pub fn save_binary(r: &BinaryRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = r.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(r.width as u32, r.height as u32, raw).expect("buffer size");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// Loads a grayscale mask; any non-zero pixel is true.
pub fn load_binary(path: impl AsRef<Path>) -> Result<BinaryRaster> {
    let path = path.as_ref();
    let img = decode(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    BinaryRaster::new(w, h, img.pixels().map(|p| p.0[0] != 0).collect())
}

/// Quantises a probability to its 16-bit stored level.
pub fn quantise(v: f64) -> u16 {
    (v * PROB_LEVELS).round() as u16
}

/// Writes a probability raster as a 16-bit grayscale PNG.
pub fn save_prob(r: &ProbRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some((index, &value)) = r
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::OutOfRange { index, value });
    }
    let raw: Vec<u16> = r.values.iter().map(|&v| quantise(v)).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(r.width as u32, r.height as u32, raw).expect("buffer size");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// Loads a probability raster. 8-bit inputs are widened to 16 bits first.
pub fn load_prob(path: impl AsRef<Path>) -> Result<ProbRaster> {
    let path = path.as_ref();
    let img = decode(path)?.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = img.pixels().map(|p| f64::from(p.0[0]) / PROB_LEVELS).collect();
    ProbRaster::new(w, h, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(RgbRaster::new(0, 1, vec![]).is_err());
        assert!(BinaryRaster::new(2, 2, vec![true; 3]).is_err());
        assert!(ProbRaster::new(1, 1, vec![1.5]).is_err());
        assert!(ProbRaster::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn row_major_indexing() {
        let r = ProbRaster::new(3, 2, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_eq!(r.get(1, 2), 0.5);
        assert_eq!(r.get(0, 1), 0.1);
    }

    #[test]
    fn rgb_identity_decode() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.png");
        let r = RgbRaster::new(1, 1, vec![[255, 255, 0]]).unwrap();
        save_rgb(&r, &p).unwrap();
        assert_eq!(load_rgb(&p).unwrap(), r);

        let black = RgbRaster::filled(2, 2, [0, 0, 0]).unwrap();
        save_rgb(&black, &p).unwrap();
        assert_eq!(load_rgb(&p).unwrap().pixels(), &[[0, 0, 0]; 4]);
    }

    #[test]
    fn distinct_load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        assert!(matches!(load_rgb(&missing), Err(Error::MissingFile(_))));

        let p = dir.path().join("t.png");
        let r = RgbRaster::filled(16, 16, [10, 20, 30]).unwrap();
        save_rgb(&r, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_rgb(&p), Err(Error::CorruptImage { .. })));

        let junk = dir.path().join("junk.dat");
        std::fs::write(&junk, b"definitely not an image").unwrap();
        assert!(matches!(load_rgb(&junk), Err(Error::UnsupportedFormat { .. })));
    }

    #[test]
    fn prob_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.png");
        let r = ProbRaster::new(3, 1, vec![1.0, 0.0, 0.3679]).unwrap();
        save_prob(&r, &p).unwrap();
        let back = load_prob(&p).unwrap();
        assert_eq!(back.values()[0], 1.0);
        assert_eq!(back.values()[1], 0.0);
        assert!((back.values()[2] - 0.3679).abs() <= 1.0 / 131070.0);
        // stored level follows round(v * 65535)
        assert_eq!(quantise(0.3679), 24110);
        assert_eq!((back.values()[2] * PROB_LEVELS).round() as u16, 24110);
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.png");
        let r = BinaryRaster::new(2, 2, vec![true, false, false, true]).unwrap();
        save_binary(&r, &p).unwrap();
        assert_eq!(load_binary(&p).unwrap(), r);
    }
}
