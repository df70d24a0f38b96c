use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use trails_core::colour::ReferenceColour;
use trails_core::extract::ExtractionConfig;
use trails_core::metrics::{AggregationMode, DEFAULT_TAU};
use trails_core::softmask::SoftMaskConfig;
use trails_core::stats::{BayesParams, DEFAULT_ROPE, DEFAULT_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Iou,
    F1,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Iou => "iou",
            Metric::F1 => "f1",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FoldSettings {
    pub k: usize,
    pub seed: u64,
}

impl Default for FoldSettings {
    fn default() -> Self {
        Self { k: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub tau: f64,
    pub aggregation: AggregationMode,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, aggregation: AggregationMode::MeanOverImages }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSettings {
    pub rope: f64,
    /// Defaults to `1 / k`.
    pub rho: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub metric: Metric,
}

impl Default for StatsSettings {
    fn default() -> Self {
        Self { rope: DEFAULT_ROPE, rho: None, n_samples: DEFAULT_SAMPLES, seed: 0, metric: Metric::Iou }
    }
}

/// Every tunable of a pipeline run. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub extraction: ExtractionConfig,
    pub softmask: SoftMaskConfig,
    pub folds: FoldSettings,
    pub evaluation: EvalSettings,
    pub stats: StatsSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data"),
            out: PathBuf::from("out"),
            extraction: ExtractionConfig::default(),
            softmask: SoftMaskConfig::default(),
            folds: FoldSettings::default(),
            evaluation: EvalSettings::default(),
            stats: StatsSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // relative paths in a config file are relative to the file
        if let Some(base) = path.parent() {
            if cfg.dataset.is_relative() {
                cfg.dataset = base.join(&cfg.dataset);
            }
            if cfg.out.is_relative() {
                cfg.out = base.join(&cfg.out);
            }
        }
        Ok(cfg)
    }

    pub fn bayes_params(&self) -> BayesParams {
        BayesParams {
            rope: self.stats.rope,
            rho: self.stats.rho.unwrap_or(1.0 / self.folds.k as f64),
            n_samples: self.stats.n_samples,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.extraction.validate()?;
        self.softmask.validate()?;
        if self.folds.k < 2 {
            bail!("folds.k must be at least 2, got {}", self.folds.k);
        }
        let tau = self.evaluation.tau;
        if !(tau > 0.0 && tau < 1.0) {
            bail!("evaluation.tau must lie in (0, 1), got {tau}");
        }
        let p = self.bayes_params();
        if !(p.rope >= 0.0) {
            bail!("stats.rope must be non-negative, got {}", p.rope);
        }
        if !(p.rho > 0.0 && p.rho < 1.0) {
            bail!("stats.rho must lie in (0, 1), got {}", p.rho);
        }
        if p.n_samples == 0 {
            bail!("stats.n_samples must be positive");
        }
        Ok(())
    }
}

/// Extraction presets offered on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Normalised distances with threshold 0.3.
    Default,
    /// Normalised distances with threshold 3, as used for the original
    /// annotations. Every pixel passes, so masks come out all-true.
    Literal,
}

impl Preset {
    pub fn config(self, reference: ReferenceColour) -> ExtractionConfig {
        let base = match self {
            Preset::Default => ExtractionConfig::default(),
            Preset::Literal => ExtractionConfig::literal(),
        };
        ExtractionConfig { reference, ..base }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.softmask.sigma, 16.0);
        assert_eq!(c.softmask.downscale, 8);
        assert_eq!(c.folds.k, 10);
        assert_eq!(c.stats.rope, 0.01);
        assert_eq!(c.stats.n_samples, 50_000);
        assert_eq!(c.evaluation.tau, 0.5);
        assert_eq!(c.bayes_params().rho, 0.1);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let c: RunConfig = toml::from_str(
            "dataset = \"d\"\n[softmask]\nsigma = 2.0\n[stats]\nrho = 0.2\n[extraction.reference]\nh = 0.5\ns = 1.0\ni = 0.6\n",
        )
        .unwrap();
        assert_eq!(c.softmask.sigma, 2.0);
        assert_eq!(c.softmask.downscale, 8);
        assert_eq!(c.bayes_params().rho, 0.2);
        assert_eq!(c.extraction.reference.h, 0.5);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::default();
        c.evaluation.tau = 1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.stats.rho = Some(1.0);
        assert!(c.validate().is_err());
    }
}
