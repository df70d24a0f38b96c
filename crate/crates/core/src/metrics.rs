//! Pixel confusion counts and the overlap metrics derived from them.

use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryRaster, ProbRaster};

pub const DEFAULT_TAU: f64 = 0.5;

/// Thresholds a probability raster: a pixel is positive iff its value is `>= tau`.
pub fn binarise(p: &ProbRaster, tau: f64) -> Result<BinaryRaster> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {tau}")));
    }
    BinaryRaster::new(p.width(), p.height(), p.values().iter().map(|&v| v >= tau).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Counts with prediction and groundtruth exchanged.
    pub fn transposed(&self) -> Self {
        Self { tp: self.tp, fp: self.fn_, tn: self.tn, fn_: self.fp }
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Tallies prediction against groundtruth over every pixel.
pub fn confusion(pred: &BinaryRaster, gt: &BinaryRaster) -> Result<ConfusionCounts> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch {
            left_w: pred.width(),
            left_h: pred.height(),
            right_w: gt.width(),
            right_h: gt.height(),
        });
    }
    Ok(pred
        .bits()
        .par_iter()
        .zip(gt.bits().par_iter())
        .fold(ConfusionCounts::default, |mut c, (&p, &g)| {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
            c
        })
        .reduce(ConfusionCounts::default, Add::add))
}

/// IoU, precision, recall and F1. `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub iou: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Overlap metrics for one set of counts.
///
/// F1 uses the count form `2tp / (2tp + fp + fn)`, equal to the harmonic mean
/// of precision and recall whenever both are defined and non-zero; it is
/// defined exactly when IoU is.
pub fn metric_set(c: &ConfusionCounts) -> MetricSet {
    MetricSet {
        iou: ratio(c.tp, c.tp + c.fp + c.fn_),
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    #[default]
    MeanOverImages,
    PooledPixels,
}

impl std::str::FromStr for AggregationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_over_images" | "mean" => Ok(Self::MeanOverImages),
            "pooled_pixels" | "pooled" => Ok(Self::PooledPixels),
            other => Err(Error::InvalidParameter(format!("unknown aggregation mode {other:?}"))),
        }
    }
}

/// How many inputs were left out of each mean because the metric was undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndefinedCounts {
    pub iou: usize,
    pub precision: usize,
    pub recall: usize,
    pub f1: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metrics: MetricSet,
    pub n_images: usize,
    pub undefined: UndefinedCounts,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut n, mut skipped) = (0.0, 0usize, 0usize);
    for v in values {
        match v {
            Some(v) => {
                sum += v;
                n += 1;
            }
            None => skipped += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), skipped)
}

/// Averages per-image metrics, skipping undefined values.
pub fn mean_over_images(sets: &[MetricSet]) -> Result<Aggregate> {
    if sets.is_empty() {
        return Err(Error::Empty("no metric sets to aggregate".into()));
    }
    let (iou, u_iou) = mean_defined(sets.iter().map(|m| m.iou));
    let (precision, u_p) = mean_defined(sets.iter().map(|m| m.precision));
    let (recall, u_r) = mean_defined(sets.iter().map(|m| m.recall));
    let (f1, u_f) = mean_defined(sets.iter().map(|m| m.f1));
    Ok(Aggregate {
        metrics: MetricSet { iou, precision, recall, f1 },
        n_images: sets.len(),
        undefined: UndefinedCounts { iou: u_iou, precision: u_p, recall: u_r, f1: u_f },
    })
}

/// Combines per-image counts with the chosen aggregation mode.
pub fn aggregate(per_image: &[ConfusionCounts], mode: AggregationMode) -> Result<Aggregate> {
    if per_image.is_empty() {
        return Err(Error::Empty("no confusion counts to aggregate".into()));
    }
    match mode {
        AggregationMode::MeanOverImages => {
            let sets: Vec<MetricSet> = per_image.iter().map(metric_set).collect();
            mean_over_images(&sets)
        }
        AggregationMode::PooledPixels => {
            let pooled: ConfusionCounts = per_image.iter().copied().sum();
            let m = metric_set(&pooled);
            Ok(Aggregate {
                metrics: m,
                n_images: per_image.len(),
                undefined: UndefinedCounts {
                    iou: usize::from(m.iou.is_none()),
                    precision: usize::from(m.precision.is_none()),
                    recall: usize::from(m.recall.is_none()),
                    f1: usize::from(m.f1.is_none()),
                },
            })
        }
    }
}
