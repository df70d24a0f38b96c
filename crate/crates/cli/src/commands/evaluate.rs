use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use trails_core::folds::{load_manifest, validate_manifest};
use trails_core::metrics::{aggregate, binarise, confusion, metric_set, Aggregate, AggregationMode, ConfusionCounts, MetricSet};
use trails_core::raster::{load_prob, BinaryRaster};

use crate::config::RunConfig;
use crate::layout::{list_models, prediction_path, Layout, ModelId};
use crate::DataError;

pub const PER_IMAGE_HEADER: [&str; 12] =
    ["image_id", "fold", "architecture", "encoder", "tp", "fp", "tn", "fn", "iou", "precision", "recall", "f1"];

#[derive(Debug, Clone, Serialize)]
pub struct ImageRow {
    pub image_id: String,
    pub fold: usize,
    pub architecture: String,
    pub encoder: String,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    #[serde(flatten)]
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gap {
    pub architecture: String,
    pub encoder: String,
    pub fold: usize,
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    complete: bool,
    tau: f64,
    aggregation: AggregationMode,
    k: usize,
    models: Vec<String>,
    images_scored: usize,
    images_expected: usize,
    gaps: &'a [Gap],
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn score(pred_path: &Path, gt: &BinaryRaster, tau: f64) -> Result<ConfusionCounts, String> {
    if !pred_path.exists() {
        return Err("missing".to_string());
    }
    let pred = load_prob(pred_path).map_err(|e| e.to_string())?;
    let pred = binarise(&pred, tau).map_err(|e| e.to_string())?;
    confusion(&pred, gt).map_err(|e| e.to_string())
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn metric_cells(m: &MetricSet) -> [String; 4] {
    [fmt_opt(m.iou), fmt_opt(m.precision), fmt_opt(m.recall), fmt_opt(m.f1)]
}

/// Per-fold aggregates keyed by model then fold.
pub fn per_fold(rows: &[ImageRow], mode: AggregationMode) -> anyhow::Result<BTreeMap<(ModelId, usize), Aggregate>> {
    let mut groups: BTreeMap<(ModelId, usize), Vec<ConfusionCounts>> = BTreeMap::new();
    for r in rows {
        let m = ModelId { architecture: r.architecture.clone(), encoder: r.encoder.clone() };
        groups.entry((m, r.fold)).or_default().push(r.counts);
    }
    groups
        .into_iter()
        .map(|(key, counts)| Ok((key, aggregate(&counts, mode)?)))
        .collect()
}

pub fn run(cfg: &RunConfig, preds: &Path) -> anyhow::Result<()> {
    let layout = Layout::new(&cfg.dataset, &cfg.out);
    let manifest_path = layout.manifest();
    let manifest = load_manifest(&manifest_path).map_err(|e| DataError(e.to_string()))?;
    let violations = validate_manifest(&manifest);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(DataError(format!("invalid manifest {}: {}", manifest_path.display(), list.join("; "))).into());
    }
    let tau = cfg.evaluation.tau;

    let gts: Vec<(String, BinaryRaster)> = manifest
        .items
        .par_iter()
        .map(|id| {
            let p = layout.soft(id);
            let soft = load_prob(&p).map_err(|e| DataError(format!("groundtruth for {id}: {e}")))?;
            Ok((id.clone(), binarise(&soft, tau)?))
        })
        .collect::<anyhow::Result<_>>()?;
    let gts: BTreeMap<String, BinaryRaster> = gts.into_iter().collect();

    let models = if preds.is_dir() { list_models(preds)? } else { Vec::new() };
    if models.is_empty() {
        return Err(DataError(format!("no prediction directories found in {}", preds.display())).into());
    }

    let jobs: Vec<(&ModelId, usize, &String)> = models
        .iter()
        .flat_map(|m| {
            manifest.folds.iter().enumerate().flat_map(move |(f, fold)| fold.test.iter().map(move |id| (m, f, id)))
        })
        .collect();
    let results: Vec<Result<ImageRow, Gap>> = jobs
        .par_iter()
        .map(|&(m, f, id)| {
            let path: PathBuf = prediction_path(preds, m, f, id);
            match score(&path, &gts[id], tau) {
                Ok(counts) => Ok(ImageRow {
                    image_id: id.clone(),
                    fold: f,
                    architecture: m.architecture.clone(),
                    encoder: m.encoder.clone(),
                    counts,
                    metrics: metric_set(&counts),
                }),
                Err(reason) => Err(Gap {
                    architecture: m.architecture.clone(),
                    encoder: m.encoder.clone(),
                    fold: f,
                    image_id: id.clone(),
                    reason,
                }),
            }
        })
        .collect();
    let (mut rows, mut gaps) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(gap) => gaps.push(gap),
        }
    }
    rows.sort_by(|a, b| {
        (&a.architecture, &a.encoder, a.fold, &a.image_id).cmp(&(&b.architecture, &b.encoder, b.fold, &b.image_id))
    });

    let dir = layout.metrics_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    write_csv(
        &dir.join("per_image.csv"),
        &PER_IMAGE_HEADER,
        rows.iter().map(|r| {
            let c = r.counts;
            let mut v = vec![
                r.image_id.clone(),
                r.fold.to_string(),
                r.architecture.clone(),
                r.encoder.clone(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
            ];
            v.extend(metric_cells(&r.metrics));
            v
        }),
    )?;
    write_json(&dir.join("per_image.json"), &rows)?;

    let folds = per_fold(&rows, cfg.evaluation.aggregation)?;
    write_csv(
        &dir.join("per_fold.csv"),
        &[
            "architecture", "encoder", "fold", "n_images", "iou", "precision", "recall", "f1",
            "undefined_iou", "undefined_precision", "undefined_recall", "undefined_f1",
        ],
        folds.iter().map(|((m, f), agg)| {
            let u = agg.undefined;
            let mut v = vec![m.architecture.clone(), m.encoder.clone(), f.to_string(), agg.n_images.to_string()];
            v.extend(metric_cells(&agg.metrics));
            v.extend([u.iou, u.precision, u.recall, u.f1].map(|n| n.to_string()));
            v
        }),
    )?;

    let mut by_model: BTreeMap<&ModelId, Vec<MetricSet>> = BTreeMap::new();
    for ((m, _), agg) in &folds {
        by_model.entry(m).or_default().push(agg.metrics);
    }
    let mut model_rows = Vec::new();
    for (m, sets) in &by_model {
        let agg = trails_core::metrics::mean_over_images(sets)?;
        let mut v = vec![m.architecture.clone(), m.encoder.clone(), sets.len().to_string()];
        v.extend(metric_cells(&agg.metrics));
        model_rows.push(v);
    }
    write_csv(
        &dir.join("per_model.csv"),
        &["architecture", "encoder", "n_folds", "iou", "precision", "recall", "f1"],
        model_rows,
    )?;

    let summary = Summary {
        complete: gaps.is_empty(),
        tau,
        aggregation: cfg.evaluation.aggregation,
        k: manifest.k,
        models: models.iter().map(ModelId::dir_name).collect(),
        images_scored: rows.len(),
        images_expected: jobs.len(),
        gaps: &gaps,
    };
    write_json(&dir.join("summary.json"), &summary)?;

    eprintln!("evaluate: {} of {} predictions scored, results in {}", rows.len(), jobs.len(), dir.display());
    if !gaps.is_empty() {
        for g in gaps.iter().take(20) {
            eprintln!("  {}__{} fold{} {}: {}", g.architecture, g.encoder, g.fold, g.image_id, g.reason);
        }
        if gaps.len() > 20 {
            eprintln!("  ... and {} more", gaps.len() - 20);
        }
        return Err(DataError(format!("{} predictions missing or unreadable; partial results written", gaps.len())).into());
    }
    Ok(())
}
