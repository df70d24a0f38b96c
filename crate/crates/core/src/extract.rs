//! Centreline extraction from colour-annotated images.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colour::{hsi_distance, rgb_to_hsi, HsiPixel, ReferenceColour};
use crate::error::{Error, Result};
use crate::raster::{BinaryRaster, RgbRaster};

/// Threshold used with the original annotations. Combined with normalised
/// distances (all ≤ 1) it accepts every pixel.
pub const LITERAL_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub reference: ReferenceColour,
    pub threshold: f64,
    pub normalise: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { reference: ReferenceColour::default(), threshold: 0.3, normalise: true }
    }
}

impl ExtractionConfig {
    /// The setting used for the original dataset: normalised distances with `Th = 3`.
    pub fn literal() -> Self {
        Self { threshold: LITERAL_THRESHOLD, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) || !self.threshold.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "extraction threshold must be positive, got {}",
                self.threshold
            )));
        }
        HsiPixel::new(self.reference.h, self.reference.s, self.reference.i).map(|_| ())
    }
}

/// Per-pixel HSI distance to the reference, optionally divided by the image maximum.
///
/// An image where every distance is zero normalises to all zeros.
pub fn distance_map(img: &RgbRaster, cfg: &ExtractionConfig) -> Vec<f64> {
    let mut d: Vec<f64> = img
        .pixels()
        .par_iter()
        .map(|&p| hsi_distance(&rgb_to_hsi(p), &cfg.reference))
        .collect();
    if cfg.normalise {
        let max = d.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            d.par_iter_mut().for_each(|v| *v /= max);
        } else {
            warn!("all pixels match the reference colour exactly; normalised distances set to 0");
        }
    }
    d
}

/// Marks pixels whose (normalised) distance to the reference is below the threshold.
pub fn extract_centreline(img: &RgbRaster, cfg: &ExtractionConfig) -> Result<BinaryRaster> {
    cfg.validate()?;
    let bits = distance_map(img, cfg)
        .into_iter()
        .map(|d| d < cfg.threshold)
        .collect();
    BinaryRaster::new(img.width(), img.height(), bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn far() -> [u8; 3] {
        [0, 0, 0]
    }

    #[test]
    fn uniform_reference_image_is_all_true() {
        let colour = [0, 255, 255];
        let img = RgbRaster::filled(4, 3, colour).unwrap();
        for normalise in [true, false] {
            for th in [1e-6, 0.3, 3.0] {
                let cfg = ExtractionConfig { reference: rgb_to_hsi(colour), threshold: th, normalise };
                assert_eq!(extract_centreline(&img, &cfg).unwrap().count_true(), 12);
            }
        }
        // a uniform image away from the reference normalises to 1 everywhere
        let m = extract_centreline(&img, &ExtractionConfig::default()).unwrap();
        assert_eq!(m.count_true(), 0);
    }

    #[test]
    fn two_pixel_normalised() {
        let near = [0, 255, 255];
        let img = RgbRaster::new(2, 1, vec![near, far()]).unwrap();
        let cfg = ExtractionConfig {
            reference: rgb_to_hsi(near),
            threshold: 0.5,
            normalise: true,
        };
        let d = distance_map(&img, &cfg);
        assert_eq!(d, vec![0.0, 1.0]);
        let m = extract_centreline(&img, &cfg).unwrap();
        assert_eq!(m.bits(), &[true, false]);
    }

    #[test]
    fn matches_straight_line_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pixels: Vec<[u8; 3]> = (0..256).map(|_| rng.random()).collect();
        let img = RgbRaster::new(16, 16, pixels.clone()).unwrap();
        let cfg = ExtractionConfig { threshold: 0.3, ..Default::default() };
        let mask = extract_centreline(&img, &cfg).unwrap();

        // oracle: recompute each step inline
        let (hr, sr, ir) = (0.6f64, 1.0f64, 1.0f64);
        let mut dist = Vec::new();
        for p in &pixels {
            let (r, g, b) = (p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0);
            let i = (r + g + b) / 3.0;
            let (h, s) = if r == g && g == b {
                (0.0, 0.0)
            } else {
                let s = 1.0 - r.min(g).min(b) / i;
                let c = (0.5 * ((r - g) + (r - b)))
                    / ((r - g).powi(2) + (r - b) * (g - b)).sqrt();
                let t = c.clamp(-1.0, 1.0).acos() * 180.0 / std::f64::consts::PI;
                (if b > g { 360.0 - t } else { t } / 360.0, s)
            };
            dist.push(((h - hr).powi(2) + (s - sr).powi(2) + (i - ir).powi(2)).sqrt());
        }
        let max = dist.iter().cloned().fold(f64::MIN, f64::max);
        let expected: Vec<bool> = dist.iter().map(|d| d / max < 0.3).collect();
        let agree = expected.iter().zip(mask.bits()).filter(|(a, b)| a == b).count();
        assert_eq!(agree, 256);
    }

    #[test]
    fn threshold_at_or_above_one_accepts_everything_when_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pixels: Vec<[u8; 3]> = (0..64).map(|_| rng.random()).collect();
        let img = RgbRaster::new(8, 8, pixels).unwrap();
        let d = distance_map(&img, &ExtractionConfig::default());
        assert!(d.iter().all(|v| (0.0..=1.0).contains(v)));
        // threshold is strict, so exactly 1.0 is still excluded for the farthest pixel
        let m = extract_centreline(&img, &ExtractionConfig { threshold: 1.0 + 1e-12, ..Default::default() }).unwrap();
        assert_eq!(m.count_true(), 64);
        assert_eq!(extract_centreline(&img, &ExtractionConfig::literal()).unwrap().count_true(), 64);
    }

    #[test]
    fn rejects_non_positive_threshold() {
        let img = RgbRaster::filled(1, 1, [1, 2, 3]).unwrap();
        for th in [0.0, -1.0, f64::NAN] {
            let cfg = ExtractionConfig { threshold: th, ..Default::default() };
            assert!(extract_centreline(&img, &cfg).is_err());
        }
    }
}
