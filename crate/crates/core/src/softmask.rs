//! Soft groundtruth from centreline masks.
//!
//! The distance transform is the exact separable lower-envelope algorithm:
//! a 1-D squared-distance pass along every row followed by the same pass along
//! every column. Parabola intersections are compared as exact rationals, so
//! the result matches a brute-force nearest-pixel search bit for bit.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryRaster, ProbRaster, RgbRaster};

/// Euclidean distance (pixels, centre to centre) to the nearest true pixel.
///
/// Every value is `f64::INFINITY` when the source mask had no true pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    squared: Vec<Option<u64>>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// True when the source mask had no foreground pixel.
    pub fn is_empty_source(&self) -> bool {
        self.squared.iter().all(Option::is_none)
    }

    /// Exact squared distances; `None` stands for infinity.
    pub fn squared(&self) -> &[Option<u64>] {
        &self.squared
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        to_distance(self.squared[row * self.width + col])
    }

    pub fn distances(&self) -> Vec<f64> {
        self.squared.iter().map(|&s| to_distance(s)).collect()
    }
}

fn to_distance(sq: Option<u64>) -> f64 {
    sq.map_or(f64::INFINITY, |s| (s as f64).sqrt())
}

/// Left boundary of a parabola in the lower envelope, `num / den` with `den > 0`.
#[derive(Debug, Clone, Copy)]
enum Bound {
    NegInf,
    At(i128, i128),
}

/// Abscissa where the parabolas rooted at `p < q` intersect.
fn intersect(p: usize, fp: u64, q: usize, fq: u64) -> (i128, i128) {
    let (p, q) = (p as i128, q as i128);
    let num = (i128::from(fq) + q * q) - (i128::from(fp) + p * p);
    (num, 2 * (q - p))
}

/// One-dimensional squared distance transform of a sampled function.
///
/// `f[i] == None` means the sample is infinite (no seed there).
fn edt_1d(f: &[Option<u64>], out: &mut [Option<u64>]) {
    // v[k]: root of the k-th envelope parabola, z[k]: its left boundary
    let mut v: Vec<(usize, u64)> = Vec::with_capacity(f.len());
    let mut z: Vec<Bound> = Vec::with_capacity(f.len());

    for (q, fq) in f.iter().enumerate() {
        let Some(fq) = *fq else { continue };
        let mut left = Bound::NegInf;
        while let Some(&(p, fp)) = v.last() {
            let (num, den) = intersect(p, fp, q, fq);
            left = Bound::At(num, den);
            match z[v.len() - 1] {
                Bound::At(zn, zd) if num * zd <= zn * den => {
                    v.pop();
                    z.pop();
                }
                _ => break,
            }
        }
        v.push((q, fq));
        z.push(left);
    }

    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = None);
        return;
    }

    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() {
            match z[k + 1] {
                Bound::At(num, den) if num < (q as i128) * den => k += 1,
                _ => break,
            }
        }
        let (p, fp) = v[k];
        let dq = q.abs_diff(p) as u64;
        *o = Some(dq * dq + fp);
    }
}

/// Exact Euclidean distance transform of a binary mask.
pub fn distance_transform(c: &BinaryRaster) -> DistanceField {
    let (w, h) = (c.width(), c.height());
    let mut rows: Vec<Option<u64>> = vec![None; w * h];
    rows.par_chunks_mut(w)
        .zip(c.bits().par_chunks(w))
        .for_each(|(out, bits)| {
            let f: Vec<Option<u64>> = bits.iter().map(|&b| b.then_some(0)).collect();
            edt_1d(&f, out);
        });

    let columns: Vec<Vec<Option<u64>>> = (0..w)
        .into_par_iter()
        .map(|col| {
            let f: Vec<Option<u64>> = (0..h).map(|row| rows[row * w + col]).collect();
            let mut out = vec![None; h];
            edt_1d(&f, &mut out);
            out
        })
        .collect();

    let mut squared = vec![None; w * h];
    for (col, values) in columns.into_iter().enumerate() {
        for (row, v) in values.into_iter().enumerate() {
            squared[row * w + col] = v;
        }
    }
    DistanceField { width: w, height: h, squared }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")))
    }
}

/// Gaussian membership `exp(-d² / σ²)` of a single distance.
pub fn gaussian(d: f64, sigma: f64) -> f64 {
    if d.is_infinite() {
        0.0
    } else {
        (-(d * d) / (sigma * sigma)).exp()
    }
}

/// Per-pixel `exp(-d² / σ²)`; pixels at infinite distance map to 0.
pub fn gaussian_mask(f: &DistanceField, sigma: f64) -> Result<ProbRaster> {
    check_sigma(sigma)?;
    let values = f
        .squared
        .par_iter()
        .map(|s| match s {
            Some(sq) => (-(*sq as f64) / (sigma * sigma)).exp(),
            None => 0.0,
        })
        .collect();
    ProbRaster::new(f.width, f.height, values)
}

/// Area-average reduction by an integer factor.
///
/// Output dimensions are `ceil(dim / factor)`; partial edge blocks average
/// over the pixels they actually cover.
pub trait Downscale: Sized {
    fn downscale(&self, factor: usize) -> Result<Self>;
}

fn check_factor(factor: usize) -> Result<()> {
    if factor == 0 {
        return Err(Error::InvalidParameter("downscale factor must be at least 1".into()));
    }
    Ok(())
}

/// Visits every output block, handing the closure the covered source indices.
fn blocks<T: Send>(
    width: usize,
    height: usize,
    factor: usize,
    reduce: impl Fn(&mut dyn Iterator<Item = usize>, usize) -> T + Sync,
) -> (usize, usize, Vec<T>) {
    let ow = width.div_ceil(factor);
    let oh = height.div_ceil(factor);
    let out = (0..ow * oh)
        .into_par_iter()
        .map(|idx| {
            let (br, bc) = (idx / ow, idx % ow);
            let rows = br * factor..((br + 1) * factor).min(height);
            let cols = bc * factor..((bc + 1) * factor).min(width);
            let n = rows.len() * cols.len();
            let mut it = rows.flat_map(|r| cols.clone().map(move |c| r * width + c));
            reduce(&mut it, n)
        })
        .collect();
    (ow, oh, out)
}

impl Downscale for ProbRaster {
    fn downscale(&self, factor: usize) -> Result<Self> {
        check_factor(factor)?;
        let values = self.values();
        let (ow, oh, out) = blocks(self.width(), self.height(), factor, |it, n| {
            let sum: f64 = it.map(|i| values[i]).sum();
            (sum / n as f64).clamp(0.0, 1.0)
        });
        ProbRaster::new(ow, oh, out)
    }
}

impl Downscale for RgbRaster {
    /// Channel means are rounded half up to the nearest byte.
    fn downscale(&self, factor: usize) -> Result<Self> {
        check_factor(factor)?;
        let px = self.pixels();
        let (ow, oh, out) = blocks(self.width(), self.height(), factor, |it, n| {
            let mut acc = [0u64; 3];
            for i in it {
                for (a, v) in acc.iter_mut().zip(px[i]) {
                    *a += u64::from(v);
                }
            }
            let n = n as u64;
            acc.map(|a| ((a + n / 2) / n) as u8)
        });
        RgbRaster::new(ow, oh, out)
    }
}

impl Downscale for BinaryRaster {
    /// A block is true when any pixel it covers is true.
    fn downscale(&self, factor: usize) -> Result<Self> {
        check_factor(factor)?;
        let bits = self.bits();
        let (ow, oh, out) = blocks(self.width(), self.height(), factor, |it, _| {
            for i in it {
                if bits[i] {
                    return true;
                }
            }
            false
        });
        BinaryRaster::new(ow, oh, out)
    }
}

pub fn downscale<R: Downscale>(r: &R, factor: usize) -> Result<R> {
    r.downscale(factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PipelineOrder {
    /// Soft mask at native resolution, then block-mean reduction.
    #[default]
    MaskThenDownscale,
    /// Centreline reduced first (block-any), soft mask built with `sigma / factor`.
    DownscaleThenMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftMaskConfig {
    pub sigma: f64,
    pub downscale: usize,
    pub order: PipelineOrder,
}

impl Default for SoftMaskConfig {
    fn default() -> Self {
        Self { sigma: 16.0, downscale: 8, order: PipelineOrder::MaskThenDownscale }
    }
}

impl SoftMaskConfig {
    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)?;
        check_factor(self.downscale)
    }
}

/// Centreline mask to downscaled soft groundtruth.
pub fn soft_mask(c: &BinaryRaster, cfg: &SoftMaskConfig) -> Result<ProbRaster> {
    cfg.validate()?;
    if c.count_true() == 0 {
        warn!("centreline mask is empty; soft mask is all zeros");
    }
    match cfg.order {
        PipelineOrder::MaskThenDownscale => {
            gaussian_mask(&distance_transform(c), cfg.sigma)?.downscale(cfg.downscale)
        }
        PipelineOrder::DownscaleThenMask => {
            let small = c.downscale(cfg.downscale)?;
            gaussian_mask(&distance_transform(&small), cfg.sigma / cfg.downscale as f64)
        }
    }
}
