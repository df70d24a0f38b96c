//! On-disk layout shared by the subcommands and external training harnesses.
//!
//! ```text
//! <dataset>/annotated/<id>.{png,jpg,jpeg}   colour-annotated inputs
//! <dataset>/images/<id>.{png,jpg,jpeg}      optional raw images
//! <out>/gt/centreline/<id>.png              binary centreline masks (native resolution)
//! <out>/gt/soft/<id>.png                    16-bit soft groundtruth (downscaled)
//! <out>/gt/provenance.json
//! <out>/images/<id>.png                     downscaled raw images
//! <out>/manifest.json
//! <out>/preds/<arch>__<enc>/fold<f>/<id>.png
//! <out>/metrics/…
//! <out>/report/…
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;

pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];
pub const MODEL_SEPARATOR: &str = "__";

pub struct Layout {
    pub dataset: PathBuf,
    pub out: PathBuf,
}

impl Layout {
    pub fn new(dataset: &Path, out: &Path) -> Self {
        Self { dataset: dataset.to_path_buf(), out: out.to_path_buf() }
    }

    pub fn annotated_dir(&self) -> PathBuf {
        self.dataset.join("annotated")
    }

    pub fn raw_dir(&self) -> PathBuf {
        self.dataset.join("images")
    }

    pub fn centreline(&self, id: &str) -> PathBuf {
        self.out.join("gt").join("centreline").join(format!("{id}.png"))
    }

    pub fn soft(&self, id: &str) -> PathBuf {
        self.out.join("gt").join("soft").join(format!("{id}.png"))
    }

    pub fn provenance(&self) -> PathBuf {
        self.out.join("gt").join("provenance.json")
    }

    pub fn downscaled_image(&self, id: &str) -> PathBuf {
        self.out.join("images").join(format!("{id}.png"))
    }

    pub fn manifest(&self) -> PathBuf {
        self.out.join("manifest.json")
    }

    pub fn preds_dir(&self) -> PathBuf {
        self.out.join("preds")
    }

    pub fn metrics_dir(&self) -> PathBuf {
        self.out.join("metrics")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }
}

pub fn prediction_path(preds: &Path, model: &ModelId, fold: usize, id: &str) -> PathBuf {
    preds.join(model.dir_name()).join(format!("fold{fold}")).join(format!("{id}.png"))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelId {
    pub architecture: String,
    pub encoder: String,
}

impl ModelId {
    pub fn parse(dir_name: &str) -> Option<Self> {
        let (a, e) = dir_name.split_once(MODEL_SEPARATOR)?;
        (!a.is_empty() && !e.is_empty())
            .then(|| Self { architecture: a.to_string(), encoder: e.to_string() })
    }

    pub fn dir_name(&self) -> String {
        format!("{}{MODEL_SEPARATOR}{}", self.architecture, self.encoder)
    }
}

/// Image files in `dir` keyed by stem, sorted by id. Fails on two files sharing a stem.
pub fn list_images(dir: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !path.is_file() || !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.push((stem.to_string(), path));
        }
    }
    out.sort();
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        anyhow::bail!("two inputs share the id {:?} in {}", w[0].0, dir.display());
    }
    Ok(out)
}

/// Model directories under the predictions root, sorted.
pub fn list_models(preds: &Path) -> anyhow::Result<Vec<ModelId>> {
    let mut out = Vec::new();
    let entries =
        std::fs::read_dir(preds).with_context(|| format!("listing {}", preds.display()))?;
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let name = entry.file_name();
        let name = name.to_string_lossy();
        match ModelId::parse(&name) {
            Some(m) => out.push(m),
            None => log::warn!("ignoring {name}: expected <architecture>__<encoder>"),
        }
    }
    out.sort();
    Ok(out)
}

pub fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))?;
    }
    Ok(())
}
