use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{anyhow, Context};
use trails_core::metrics::{metric_set, ConfusionCounts};
use trails_core::report::{build_heatmap, render, Format, HeatmapSpec, ReportDocument};
use trails_core::stats::{pairwise_matrix, BayesMatrix, BayesParams, ScoreGrid};

use super::evaluate::{per_fold, ImageRow, PER_IMAGE_HEADER};
use crate::config::{Metric, RunConfig};
use crate::layout::ModelId;
use crate::DataError;

pub fn read_per_image(path: &Path) -> anyhow::Result<Vec<ImageRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| DataError(format!("reading {}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError(format!("{} has no {name} column", path.display())))
    };
    let idx: Vec<usize> = PER_IMAGE_HEADER.iter().map(|h| col(h)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let int = |i: usize| -> anyhow::Result<u64> {
            field(i).parse().map_err(|_| {
                anyhow!(DataError(format!(
                    "{} row {}: bad {} value {:?}",
                    path.display(),
                    line + 2,
                    PER_IMAGE_HEADER[i],
                    field(i)
                )))
            })
        };
        let counts = ConfusionCounts::new(int(4)?, int(5)?, int(6)?, int(7)?);
        rows.push(ImageRow {
            image_id: field(0).to_string(),
            fold: int(1)? as usize,
            architecture: field(2).to_string(),
            encoder: field(3).to_string(),
            counts,
            metrics: metric_set(&counts),
        });
    }
    if rows.is_empty() {
        return Err(DataError(format!("{} has no rows", path.display())).into());
    }
    Ok(rows)
}

fn check_complete(metrics: &Path) -> anyhow::Result<()> {
    let summary = metrics.with_file_name("summary.json");
    let Ok(text) = std::fs::read_to_string(&summary) else {
        return Ok(());
    };
    let v: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", summary.display()))?;
    if v.get("complete") == Some(&serde_json::Value::Bool(false)) {
        return Err(DataError(format!("{} marks the evaluation incomplete; rerun evaluate", summary.display())).into());
    }
    Ok(())
}

/// Per-fold IoU and F1 grids from per-image rows.
pub fn score_grids(rows: &[ImageRow], cfg: &RunConfig) -> anyhow::Result<(ScoreGrid, ScoreGrid)> {
    let folds = per_fold(rows, cfg.evaluation.aggregation)?;
    let archs: BTreeSet<&str> = rows.iter().map(|r| r.architecture.as_str()).collect();
    let encs: BTreeSet<&str> = rows.iter().map(|r| r.encoder.as_str()).collect();
    let fold_ids: BTreeSet<usize> = rows.iter().map(|r| r.fold).collect();
    let mut iou = ScoreGrid::new(archs.iter().map(|s| s.to_string()).collect(), encs.iter().map(|s| s.to_string()).collect());
    let mut f1 = iou.clone();

    let mut per_model: BTreeMap<&ModelId, Vec<(usize, Option<f64>, Option<f64>)>> = BTreeMap::new();
    for ((m, f), agg) in &folds {
        per_model.entry(m).or_default().push((*f, agg.metrics.iou, agg.metrics.f1));
    }
    for (m, scores) in per_model {
        let have: BTreeSet<usize> = scores.iter().map(|s| s.0).collect();
        if have != fold_ids {
            let missing: Vec<String> = fold_ids.difference(&have).map(|f| f.to_string()).collect();
            return Err(DataError(format!("{} has no rows for fold(s) {}", m.dir_name(), missing.join(", "))).into());
        }
        let pick = |sel: fn(&(usize, Option<f64>, Option<f64>)) -> Option<f64>, name: &str| {
            scores
                .iter()
                .map(|s| sel(s).ok_or_else(|| DataError(format!("{} fold {}: {name} undefined", m.dir_name(), s.0))))
                .collect::<Result<Vec<f64>, _>>()
        };
        iou.set(&m.architecture, &m.encoder, pick(|s| s.1, "iou")?)?;
        f1.set(&m.architecture, &m.encoder, pick(|s| s.2, "f1")?)?;
    }
    let missing = iou.missing();
    if !missing.is_empty() {
        return Err(DataError(format!("model grid is incomplete, missing {}", missing.join(", "))).into());
    }
    Ok((iou, f1))
}

/// The best encoder of every architecture, as `(arch__enc, per-fold scores)`.
pub fn best_per_architecture(h: &HeatmapSpec) -> Vec<(String, Vec<f64>)> {
    h.best_per_column
        .iter()
        .map(|b| {
            let enc = &b.encoders[0];
            let a = h.grid.architectures.iter().position(|x| *x == b.architecture).expect("known architecture");
            let e = h.grid.encoders.iter().position(|x| x == enc).expect("known encoder");
            let m = ModelId { architecture: b.architecture.clone(), encoder: enc.clone() };
            (m.dir_name(), h.grid.cell(a, e).expect("complete grid").per_fold.clone())
        })
        .collect()
}

fn write_all(doc: &ReportDocument, dir: &Path, stem: &str) -> anyhow::Result<()> {
    for f in Format::ALL {
        render(doc, f, dir.join(format!("{stem}.{}", f.extension())))?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, metrics: &Path, out_dir: &Path) -> anyhow::Result<()> {
    check_complete(metrics)?;
    let rows = read_per_image(metrics)?;
    let (iou, f1) = score_grids(&rows, cfg)?;
    let k = iou.require_complete()?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let h_iou = build_heatmap(&iou, "iou")?;
    let h_f1 = build_heatmap(&f1, "f1")?;
    write_all(&ReportDocument::Heatmap(h_iou.clone()), out_dir, "heatmap_iou")?;
    write_all(&ReportDocument::Heatmap(h_f1.clone()), out_dir, "heatmap_f1")?;

    let chosen = match cfg.stats.metric {
        Metric::Iou => &h_iou,
        Metric::F1 => &h_f1,
    };
    let methods = best_per_architecture(chosen);
    let params = BayesParams {
        rope: cfg.stats.rope,
        rho: cfg.stats.rho.unwrap_or(1.0 / k as f64),
        n_samples: cfg.stats.n_samples,
    };
    let matrix = if methods.len() < 2 {
        eprintln!("compare: only {} architecture(s); the pairwise matrix is empty", methods.len());
        BayesMatrix { methods: methods.into_iter().map(|m| m.0).collect(), cells: Vec::new() }
    } else {
        pairwise_matrix(&methods, &params, cfg.stats.seed)?
    };
    write_all(&ReportDocument::Bayes(matrix), out_dir, "bayes")?;
    eprintln!("compare: reports written to {} (pairwise test on {})", out_dir.display(), cfg.stats.metric.name());
    Ok(())
}
