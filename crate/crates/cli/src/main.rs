//! `trails`: groundtruth generation, fold splitting, evaluation and model comparison
//! for trail segmentation datasets.

mod commands;
mod config;
mod layout;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trails_core::colour::HsiPixel;
use trails_core::metrics::AggregationMode;
use trails_core::report::Format;
use trails_core::softmask::PipelineOrder;

use config::{Metric, Preset, RunConfig};
use layout::Layout;

/// Bad or missing input data. Exits with status 2.
#[derive(Debug)]
pub struct DataError(pub String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

/// Invalid arguments or configuration. Exits with status 1.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "trails", version, about = "Trail groundtruth, evaluation and comparison pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, env = "TRAILS_CONFIG")]
    config: Option<PathBuf>,
    /// Dataset root holding annotated/ and optionally images/.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Output root.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ExtractionArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Colour-distance threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Normalise distances by their per-image maximum.
    #[arg(long)]
    normalise: Option<bool>,
    #[arg(long = "ref-h")]
    ref_h: Option<f64>,
    #[arg(long = "ref-s")]
    ref_s: Option<f64>,
    #[arg(long = "ref-i")]
    ref_i: Option<f64>,
    /// Gaussian width in native pixels.
    #[arg(long)]
    sigma: Option<f64>,
    /// Integer downscale factor.
    #[arg(long)]
    downscale: Option<usize>,
    #[arg(long, value_parser = parse_order)]
    order: Option<PipelineOrder>,
}

#[derive(Args, Default)]
struct FoldArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct EvalArgs {
    /// Binarisation threshold for soft masks and predictions.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_parser = parse_aggregation)]
    aggregation: Option<AggregationMode>,
}

#[derive(Args, Default)]
struct StatsArgs {
    #[arg(long)]
    rope: Option<f64>,
    /// Correlation between folds; defaults to 1/k.
    #[arg(long)]
    rho: Option<f64>,
    /// Monte Carlo samples per pair.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "stats-seed")]
    stats_seed: Option<u64>,
    /// Metric compared by the Bayesian test.
    #[arg(long, value_enum)]
    metric: Option<Metric>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract centrelines from annotated images and write soft groundtruth.
    MakeGt(#[command(flatten)] ExtractionArgs),
    /// Write a k-fold train/val/test manifest.
    Split(#[command(flatten)] FoldArgs),
    /// Score predictions against the groundtruth.
    Evaluate {
        #[command(flatten)]
        eval: EvalArgs,
        /// Prediction root; defaults to <out>/preds.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Build heatmaps, rankings and the pairwise Bayesian comparison.
    Compare {
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        stats: StatsArgs,
        /// Per-image metrics CSV; defaults to <out>/metrics/per_image.csv.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Report directory; defaults to <out>/report.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a saved report document in other formats.
    Report {
        /// Report JSON written by compare.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_format, value_delimiter = ',', default_values = ["csv", "json", "svg"])]
        format: Vec<Format>,
        /// Output file for a single format, or directory for several.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_order(s: &str) -> Result<PipelineOrder, String> {
    match s {
        "mask-then-downscale" | "mask_then_downscale" => Ok(PipelineOrder::MaskThenDownscale),
        "downscale-then-mask" | "downscale_then_mask" => Ok(PipelineOrder::DownscaleThenMask),
        other => Err(format!("unknown order {other:?}; expected mask-then-downscale or downscale-then-mask")),
    }
}

fn parse_aggregation(s: &str) -> Result<AggregationMode, String> {
    s.replace('-', "_").parse().map_err(|e: trails_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: trails_core::Error| e.to_string())
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ExtractionArgs {
    fn apply(&self, cfg: &mut RunConfig) -> anyhow::Result<()> {
        if let Some(p) = self.preset {
            cfg.extraction = p.config(cfg.extraction.reference);
        }
        set(&mut cfg.extraction.threshold, self.threshold);
        set(&mut cfg.extraction.normalise, self.normalise);
        let r = cfg.extraction.reference;
        if self.ref_h.is_some() || self.ref_s.is_some() || self.ref_i.is_some() {
            cfg.extraction.reference =
                HsiPixel::new(self.ref_h.unwrap_or(r.h), self.ref_s.unwrap_or(r.s), self.ref_i.unwrap_or(r.i))?;
        }
        set(&mut cfg.softmask.sigma, self.sigma);
        set(&mut cfg.softmask.downscale, self.downscale);
        set(&mut cfg.softmask.order, self.order);
        Ok(())
    }
}

impl EvalArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.evaluation.tau, self.tau);
        set(&mut cfg.evaluation.aggregation, self.aggregation);
    }
}

impl StatsArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.stats.rope, self.rope);
        if self.rho.is_some() {
            cfg.stats.rho = self.rho;
        }
        set(&mut cfg.stats.n_samples, self.samples);
        set(&mut cfg.stats.seed, self.stats_seed);
        set(&mut cfg.stats.metric, self.metric);
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| UsageError(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    set(&mut cfg.dataset, cli.dataset.clone());
    set(&mut cfg.out, cli.out.clone());
    match &cli.command {
        Command::MakeGt(a) => a.apply(&mut cfg).map_err(|e| UsageError(e.to_string()))?,
        Command::Split(a) => {
            set(&mut cfg.folds.k, a.k);
            set(&mut cfg.folds.seed, a.seed);
        }
        Command::Evaluate { eval, .. } => eval.apply(&mut cfg),
        Command::Compare { eval, stats, .. } => {
            eval.apply(&mut cfg);
            stats.apply(&mut cfg);
        }
        Command::Report { .. } => {}
    }
    cfg.validate().map_err(|e| UsageError(format!("{e:#}")))?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(&cli)?;
    let layout = Layout::new(&cfg.dataset, &cfg.out);
    match &cli.command {
        Command::MakeGt(_) => commands::make_gt::run(&cfg),
        Command::Split(_) => commands::split::run(&cfg),
        Command::Evaluate { predictions, .. } => {
            let preds = predictions.clone().unwrap_or_else(|| layout.preds_dir());
            commands::evaluate::run(&cfg, &preds)
        }
        Command::Compare { metrics, output, .. } => {
            let metrics = metrics.clone().unwrap_or_else(|| layout.metrics_dir().join("per_image.csv"));
            let output = output.clone().unwrap_or_else(|| layout.report_dir());
            commands::compare::run(&cfg, &metrics, &output)
        }
        Command::Report { input, format, output } => commands::report::run(input, format, output.as_deref().map(Path::new)),
    }
}

fn init_workers() -> Result<(), String> {
    let Ok(v) = std::env::var("TRAILS_WORKERS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| format!("TRAILS_WORKERS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("TRAILS_WORKERS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
