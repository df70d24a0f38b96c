#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trails_core::folds::{derive_seed, load_manifest, SplitMix64};
use trails_core::raster::{load_prob, save_prob, save_rgb, ProbRaster};
use trails_core::synthetic::scene;

pub const FIXTURE_IMAGES: u64 = 8;
pub const FIXTURE_WIDTH: usize = 128;
pub const FIXTURE_HEIGHT: usize = 96;
pub const FIXTURE_K: usize = 4;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join("synthetic")
}

pub fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn updating() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

/// Writes the synthetic dataset: `annotated/` and `images/` with eight scenes.
pub fn write_fixture(dataset: &Path) {
    std::fs::create_dir_all(dataset.join("annotated")).unwrap();
    std::fs::create_dir_all(dataset.join("images")).unwrap();
    for i in 0..FIXTURE_IMAGES {
        let s = scene(FIXTURE_WIDTH, FIXTURE_HEIGHT, 1 + (i as usize % 3), 1, 100 + i);
        let name = format!("scene{i:02}.png");
        save_rgb(&s.annotated, dataset.join("annotated").join(&name)).unwrap();
        save_rgb(&s.raw, dataset.join("images").join(&name)).unwrap();
    }
}

/// The checked-in fixture dataset, regenerated when `UPDATE_GOLDEN` is set.
pub fn fixture_dataset() -> PathBuf {
    let dir = fixtures();
    if updating() || !dir.join("annotated").is_dir() {
        write_fixture(&dir);
    }
    dir
}

pub fn trails(args: &[&str]) -> Output {
    trails_env(args, &[])
}

pub fn trails_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_trails"));
    cmd.args(args).env_remove("TRAILS_CONFIG").env_remove("TRAILS_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run trails")
}

pub fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "trails failed with {:?}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// The 2x2 model grid used by the end-to-end checks.
pub const MODELS: [&str; 4] = [ORACLE, INVERTED, SHIFTED, NOISY];
pub const ORACLE: &str = "alpha__enc1";
pub const INVERTED: &str = "alpha__enc2";
pub const SHIFTED: &str = "beta__enc1";
pub const NOISY: &str = "beta__enc2";

fn predict(model: &str, gt: &ProbRaster, seed: u64) -> ProbRaster {
    let (w, h) = (gt.width(), gt.height());
    let values = match model {
        ORACLE => gt.values().to_vec(),
        INVERTED => gt.values().iter().map(|v| 1.0 - v).collect(),
        SHIFTED => (0..w * h)
            .map(|i| {
                let (r, c) = (i / w, i % w);
                if c == 0 { 0.0 } else { gt.get(r, c - 1) }
            })
            .collect(),
        NOISY => {
            let mut rng = SplitMix64::new(seed);
            gt.values()
                .iter()
                .map(|v| {
                    let noise = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    (0.7 * v + 0.45 * noise).min(1.0)
                })
                .collect()
        }
        other => panic!("unknown model {other}"),
    };
    ProbRaster::new(w, h, values).unwrap()
}

/// Writes predictions for every model, fold and test image from the soft groundtruth under `out`.
pub fn write_predictions(out: &Path, models: &[&str]) {
    let manifest = load_manifest(out.join("manifest.json")).unwrap();
    for (mi, model) in models.iter().enumerate() {
        for (f, fold) in manifest.folds.iter().enumerate() {
            let dir = out.join("preds").join(model).join(format!("fold{f}"));
            std::fs::create_dir_all(&dir).unwrap();
            for (j, id) in fold.test.iter().enumerate() {
                let gt = load_prob(out.join("gt").join("soft").join(format!("{id}.png"))).unwrap();
                let seed = derive_seed(7, &[mi as u64, f as u64, j as u64]);
                save_prob(&predict(model, &gt, seed), dir.join(format!("{id}.png"))).unwrap();
            }
        }
    }
}

/// Runs make-gt, split, evaluate and compare on the fixture into `out`.
pub fn run_pipeline(out: &Path, env: &[(&str, &str)]) {
    let dataset = fixture_dataset();
    let (d, o) = (dataset.to_str().unwrap(), out.to_str().unwrap());
    let k = FIXTURE_K.to_string();
    ok(&trails_env(&["make-gt", "--dataset", d, "--out", o], env));
    ok(&trails_env(&["split", "--dataset", d, "--out", o, "--k", &k, "--seed", "3"], env));
    write_predictions(out, &MODELS);
    ok(&trails_env(&["evaluate", "--dataset", d, "--out", o], env));
    ok(&trails_env(&["compare", "--dataset", d, "--out", o], env));
}

/// Text outputs compared byte-for-byte against the golden copies.
pub const GOLDEN_FILES: [&str; 15] = [
    "gt/provenance.json",
    "manifest.json",
    "metrics/per_image.csv",
    "metrics/per_image.json",
    "metrics/per_fold.csv",
    "metrics/per_model.csv",
    "metrics/summary.json",
    "report/heatmap_iou.csv",
    "report/heatmap_iou.json",
    "report/heatmap_iou.svg",
    "report/heatmap_f1.csv",
    "report/heatmap_f1.json",
    "report/bayes.csv",
    "report/bayes.json",
    "report/bayes.svg",
];
