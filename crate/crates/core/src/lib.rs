//! Groundtruth generation, scoring and statistical comparison for
//! segmentation models that map grazing trails in aerial imagery.
//!
//! The pipeline runs colour-annotated images through [`extract`] (binary
//! centrelines), [`softmask`] (exact distance transform and Gaussian soft
//! labels), scores prediction rasters with [`metrics`] over the
//! cross-validation folds from [`folds`], and compares model grids with the
//! rankings and Bayesian tests in [`stats`], rendered by [`report`].

pub mod colour;
pub mod error;
pub mod extract;
pub mod folds;
pub mod metrics;
pub mod raster;
pub mod report;
pub mod softmask;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
