use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use trails_core::extract::{extract_centreline, ExtractionConfig};
use trails_core::raster::{load_rgb, save_binary, save_prob, save_rgb};
use trails_core::softmask::{soft_mask, Downscale, SoftMaskConfig};

use crate::config::RunConfig;
use crate::layout::{ensure_parent, list_images, Layout};
use crate::DataError;

#[derive(Debug, Serialize)]
pub struct GtRecord {
    pub id: String,
    pub source: String,
    pub width: usize,
    pub height: usize,
    pub centreline_pixels: usize,
    pub soft_width: usize,
    pub soft_height: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_image: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct GtFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub extraction: ExtractionConfig,
    pub softmask: SoftMaskConfig,
    pub items: Vec<GtRecord>,
    pub failures: Vec<GtFailure>,
}

fn process(layout: &Layout, cfg: &RunConfig, id: &str, path: &std::path::Path, raw: Option<&std::path::Path>) -> anyhow::Result<GtRecord> {
    let img = load_rgb(path)?;
    let mut warnings = Vec::new();
    let centreline = extract_centreline(&img, &cfg.extraction)?;
    let positives = centreline.count_true();
    if positives == 0 {
        warnings.push("no centreline pixels; soft mask is all zeros".to_string());
    } else if positives == img.width() * img.height() {
        warnings.push("every pixel passed the colour threshold".to_string());
    }
    let out = layout.centreline(id);
    ensure_parent(&out)?;
    save_binary(&centreline, &out)?;

    let soft = soft_mask(&centreline, &cfg.softmask)?;
    let out = layout.soft(id);
    ensure_parent(&out)?;
    save_prob(&soft, &out)?;

    let raw_image = match raw {
        Some(raw) => {
            let r = load_rgb(raw).with_context(|| format!("raw image for {id}"))?;
            if (r.width(), r.height()) != (img.width(), img.height()) {
                anyhow::bail!(
                    "raw image is {}x{} but annotation is {}x{}",
                    r.width(),
                    r.height(),
                    img.width(),
                    img.height()
                );
            }
            let out = layout.downscaled_image(id);
            ensure_parent(&out)?;
            save_rgb(&r.downscale(cfg.softmask.downscale)?, &out)?;
            raw.file_name().map(|n| n.to_string_lossy().into_owned())
        }
        None => None,
    };

    Ok(GtRecord {
        id: id.to_string(),
        source: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        width: img.width(),
        height: img.height(),
        centreline_pixels: positives,
        soft_width: soft.width(),
        soft_height: soft.height(),
        raw_image,
        warnings,
    })
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<()> {
    let layout = Layout::new(&cfg.dataset, &cfg.out);
    let dir = layout.annotated_dir();
    let inputs = if dir.is_dir() { list_images(&dir)? } else { Vec::new() };
    if inputs.is_empty() {
        return Err(DataError(format!("no inputs: no annotated images found in {}", dir.display())).into());
    }
    let raw = if layout.raw_dir().is_dir() { list_images(&layout.raw_dir())? } else { Vec::new() };

    let results: Vec<(String, anyhow::Result<GtRecord>)> = inputs
        .par_iter()
        .map(|(id, path)| {
            let raw_path = raw.iter().find(|(r, _)| r == id).map(|(_, p)| p.as_path());
            (id.clone(), process(&layout, cfg, id, path, raw_path))
        })
        .collect();

    let mut items = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(rec) => {
                for w in &rec.warnings {
                    log::warn!("{id}: {w}");
                }
                items.push(rec);
            }
            Err(e) => {
                eprintln!("error: {id}: {e:#}");
                failures.push(GtFailure { id, error: format!("{e:#}") });
            }
        }
    }
    let n_ok = items.len();
    let n_failed = failures.len();
    let prov = Provenance { extraction: cfg.extraction, softmask: cfg.softmask, items, failures };
    let path = layout.provenance();
    ensure_parent(&path)?;
    let mut text = serde_json::to_string_pretty(&prov)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;

    eprintln!("make-gt: {n_ok} groundtruth masks written to {}", cfg.out.join("gt").display());
    if n_failed > 0 {
        return Err(DataError(format!("{n_failed} of {} inputs failed; see {}", n_ok + n_failed, path.display())).into());
    }
    Ok(())
}
