use trails_core::folds::{make_folds, save_manifest, validate_manifest};

use crate::config::RunConfig;
use crate::layout::{ensure_parent, list_images, Layout};
use crate::DataError;

/// Item ids come from the annotated inputs, so splitting does not depend on make-gt.
pub fn run(cfg: &RunConfig) -> anyhow::Result<()> {
    let layout = Layout::new(&cfg.dataset, &cfg.out);
    let dir = layout.annotated_dir();
    let ids: Vec<String> = if dir.is_dir() {
        list_images(&dir)?.into_iter().map(|(id, _)| id).collect()
    } else {
        Vec::new()
    };
    if ids.is_empty() {
        return Err(DataError(format!("no inputs: no annotated images found in {}", dir.display())).into());
    }
    let manifest = make_folds(&ids, cfg.folds.k, cfg.folds.seed).map_err(|e| DataError(e.to_string()))?;
    let violations = validate_manifest(&manifest);
    assert!(violations.is_empty(), "generated manifest violates invariants: {violations:?}");
    let path = layout.manifest();
    ensure_parent(&path)?;
    save_manifest(&manifest, &path)?;
    eprintln!("split: {} items in {} folds written to {}", ids.len(), cfg.folds.k, path.display());
    Ok(())
}
