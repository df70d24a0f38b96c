use proptest::prelude::*;
use trails_core::extract::{extract_centreline, ExtractionConfig};
use trails_core::metrics::{binarise, confusion, metric_set};
use trails_core::raster::{load_prob, quantise, save_prob, ProbRaster, PROB_LEVELS};
use trails_core::softmask::{soft_mask, SoftMaskConfig};
use trails_core::synthetic::scene;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prob_png_roundtrip_is_idempotent(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
        let mut rng = trails_core::folds::SplitMix64::new(seed);
        let values = (0..w * h).map(|_| rng.below(1 << 20) as f64 / (1 << 20) as f64).collect();
        let p = ProbRaster::new(w, h, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.png");
        save_prob(&p, &path).unwrap();
        let once = load_prob(&path).unwrap();
        for (a, b) in p.values().iter().zip(once.values()) {
            prop_assert!((a - b).abs() <= 0.5 / PROB_LEVELS + 1e-15);
            prop_assert_eq!(quantise(*a), quantise(*b));
        }
        save_prob(&once, &path).unwrap();
        prop_assert_eq!(load_prob(&path).unwrap(), once);
    }
}

#[test]
fn synthetic_groundtruth_scores_itself_perfectly() {
    let s = scene(96, 64, 2, 1, 9);
    let c = extract_centreline(&s.annotated, &ExtractionConfig::default()).unwrap();
    assert_eq!(c, s.strokes);
    let soft = soft_mask(&c, &SoftMaskConfig::default()).unwrap();
    assert_eq!((soft.width(), soft.height()), (12, 8));
    let gt = binarise(&soft, 0.5).unwrap();
    let m = metric_set(&confusion(&gt, &gt).unwrap());
    assert_eq!(m.iou, Some(1.0));
    let inv = metric_set(&confusion(&gt.complement(), &gt).unwrap());
    assert_eq!(inv.iou, Some(0.0));
}
