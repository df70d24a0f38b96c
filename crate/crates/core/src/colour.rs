//! RGB to HSI conversion and the colour distance used to pick annotation strokes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hue, saturation and intensity, each normalised to `[0, 1]` (hue 1 ≡ 360°).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsiPixel {
    pub h: f64,
    pub s: f64,
    pub i: f64,
}

impl HsiPixel {
    pub fn new(h: f64, s: f64, i: f64) -> Result<Self> {
        for (name, v) in [("h", h), ("s", s), ("i", i)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "HSI component {name}={v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { h, s, i })
    }
}

/// Colour of the annotation strokes in HSI space.
///
/// The default `(0.6, 1, 1)` is the value used for the original trail
/// annotations. Note that under the standard HSI definition no RGB triple
/// reaches it: `s = 1` forces one channel to zero, capping intensity at 2/3,
/// and hue 0.6 (216°) lies in the blue range although the strokes were drawn
/// with a yellow pencil. Keep it configurable.
pub type ReferenceColour = HsiPixel;

impl Default for HsiPixel {
    fn default() -> Self {
        Self { h: 0.6, s: 1.0, i: 1.0 }
    }
}

/// Standard arccos-form RGB to HSI conversion.
///
/// Achromatic pixels (including black) get hue 0; black gets saturation 0.
pub fn rgb_to_hsi([r, g, b]: [u8; 3]) -> HsiPixel {
    let (r, g, b) = (f64::from(r) / 255.0, f64::from(g) / 255.0, f64::from(b) / 255.0);
    let sum = r + g + b;
    let i = sum / 3.0;
    if sum == 0.0 {
        return HsiPixel { h: 0.0, s: 0.0, i: 0.0 };
    }
    if r == g && g == b {
        return HsiPixel { h: 0.0, s: 0.0, i: r };
    }
    let min = r.min(g).min(b);
    let s = (1.0 - min / i).clamp(0.0, 1.0);
    let num = 0.5 * ((r - g) + (r - b));
    let den = ((r - g) * (r - g) + (r - b) * (g - b)).sqrt();
    let theta = (num / den).clamp(-1.0, 1.0).acos().to_degrees();
    let deg = if b <= g { theta } else { 360.0 - theta };
    let h = (deg / 360.0).clamp(0.0, 1.0);
    HsiPixel { h, s, i: i.clamp(0.0, 1.0) }
}

/// Plain Euclidean distance in HSI space. Hue is treated linearly (no wrap).
pub fn hsi_distance(p: &HsiPixel, reference: &ReferenceColour) -> f64 {
    let dh = p.h - reference.h;
    let ds = p.s - reference.s;
    let di = p.i - reference.i;
    (dh * dh + ds * ds + di * di).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn black_and_gray() {
        assert_eq!(rgb_to_hsi([0, 0, 0]), HsiPixel { h: 0.0, s: 0.0, i: 0.0 });
        let g = rgb_to_hsi([128, 128, 128]);
        assert_eq!((g.h, g.s), (0.0, 0.0));
        assert_abs_diff_eq!(g.i, 0.50196, epsilon = 1e-5);
    }

    #[test]
    fn pure_red() {
        let p = rgb_to_hsi([255, 0, 0]);
        assert_abs_diff_eq!(p.h, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.s, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.i, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn primaries_and_secondaries() {
        // green 120°, blue 240°, yellow 60°, cyan 180°
        assert_abs_diff_eq!(rgb_to_hsi([0, 255, 0]).h, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rgb_to_hsi([0, 0, 255]).h, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rgb_to_hsi([255, 255, 0]).h, 1.0 / 6.0, epsilon = 1e-12);
        let yellow = rgb_to_hsi([255, 255, 0]);
        assert_abs_diff_eq!(yellow.i, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rgb_to_hsi([0, 255, 255]).h, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn distance_examples() {
        let r = ReferenceColour::default();
        assert_eq!(hsi_distance(&r, &r), 0.0);
        let p = HsiPixel::new(0.6, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(hsi_distance(&p, &r), 1.0, epsilon = 1e-15);
        let q = HsiPixel::new(0.1, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(hsi_distance(&q, &r), 0.75f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(hsi_distance(&q, &r), 0.8660, epsilon = 1e-4);
    }

    #[test]
    fn rejects_out_of_range_reference() {
        assert!(HsiPixel::new(1.2, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn components_in_unit_interval(r: u8, g: u8, b: u8) {
            let p = rgb_to_hsi([r, g, b]);
            for v in [p.h, p.s, p.i] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn grays_are_achromatic(v: u8) {
            let p = rgb_to_hsi([v, v, v]);
            prop_assert_eq!(p.s, 0.0);
            prop_assert_eq!(p.h, 0.0);
            prop_assert!((p.i - f64::from(v) / 255.0).abs() < 1e-15);
        }

        #[test]
        fn distance_bounded_and_symmetric(
            a in (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64),
            b in (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64),
        ) {
            let p = HsiPixel::new(a.0, a.1, a.2).unwrap();
            let q = HsiPixel::new(b.0, b.1, b.2).unwrap();
            let d = hsi_distance(&p, &q);
            prop_assert!(d <= 3f64.sqrt() + 1e-15);
            prop_assert_eq!(d, hsi_distance(&q, &p));
        }
    }
}
