//! Deterministic synthetic aerial scenes with annotated trails.
//!
//! Used for fixtures and tests: a mottled earth-tone background with dark
//! shadow speckles, crossed by a few smooth trails painted in the stroke
//! colour. Everything is driven by [`SplitMix64`], so a seed always yields
//! the same bytes.

use crate::folds::SplitMix64;
use crate::raster::{BinaryRaster, RgbRaster};

/// Stroke colour of synthetic annotations. Cyan is the closest RGB colour to
/// the default reference in HSI space.
pub const STROKE: [u8; 3] = [0, 255, 255];

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    /// Background without annotations.
    pub raw: RgbRaster,
    /// Background with trails painted in [`STROKE`].
    pub annotated: RgbRaster,
    /// Pixels painted with the stroke colour.
    pub strokes: BinaryRaster,
}

fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Builds a `width × height` scene with `trails` painted trails of the given
/// half-width in pixels (0 gives single-pixel strokes).
pub fn scene(width: usize, height: usize, trails: usize, half_width: usize, seed: u64) -> SyntheticScene {
    let mut rng = SplitMix64::new(seed);
    let mut raw = Vec::with_capacity(width * height);
    let base = [
        [112u8, 124, 66],
        [138, 118, 84],
        [96, 110, 72],
        [170, 156, 128],
    ];
    for _ in 0..width * height {
        let roll = unit(&mut rng);
        if roll < 0.04 {
            let v = (rng.below(16)) as u8;
            raw.push([v + 6, v + 8, v + 4]);
            continue;
        }
        let b = base[rng.below(base.len() as u64) as usize];
        let jitter = |c: u8, rng: &mut SplitMix64| (i16::from(c) + rng.below(31) as i16 - 15).clamp(0, 255) as u8;
        raw.push([jitter(b[0], &mut rng), jitter(b[1], &mut rng), jitter(b[2], &mut rng)]);
    }

    let mut strokes = vec![false; width * height];
    let hw = half_width as i64;
    for _ in 0..trails {
        // sinusoidal path crossing the image horizontally or vertically
        let horizontal = rng.below(2) == 0;
        let (len, across) = if horizontal { (width, height) } else { (height, width) };
        let offset = 0.15 + 0.7 * unit(&mut rng);
        let amp = 0.05 + 0.15 * unit(&mut rng);
        let freq = 0.5 + 1.5 * unit(&mut rng);
        let phase = std::f64::consts::TAU * unit(&mut rng);
        let mut prev: Option<i64> = None;
        for t in 0..len {
            let s = t as f64 / len as f64;
            let c = ((offset + amp * (std::f64::consts::TAU * freq * s + phase).sin()) * across as f64)
                .round() as i64;
            // fill the gap to the previous sample so the stroke stays connected
            let (lo, hi) = match prev {
                Some(p) => (p.min(c), p.max(c)),
                None => (c, c),
            };
            for mid in lo..=hi {
                for dt in -hw..=hw {
                    for dc in -hw..=hw {
                        let (along, ac) = (t as i64 + dt, mid + dc);
                        if along < 0 || ac < 0 || along >= len as i64 || ac >= across as i64 {
                            continue;
                        }
                        let (row, col) = if horizontal { (ac, along) } else { (along, ac) };
                        strokes[row as usize * width + col as usize] = true;
                    }
                }
            }
            prev = Some(c);
        }
    }

    let annotated = raw
        .iter()
        .zip(&strokes)
        .map(|(&p, &s)| if s { STROKE } else { p })
        .collect();
    SyntheticScene {
        raw: RgbRaster::new(width, height, raw).expect("dimensions"),
        annotated: RgbRaster::new(width, height, annotated).expect("dimensions"),
        strokes: BinaryRaster::new(width, height, strokes).expect("dimensions"),
    }
}
