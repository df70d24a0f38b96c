//! Deterministic k-fold train/validation/test manifests.
//!
//! Items are shuffled with a Fisher–Yates pass driven by SplitMix64 (seeded
//! with the manifest seed), then cut into `k` contiguous blocks. Fold `f`
//! tests on block `f`, validates on block `f + 1 (mod k)` and trains on the
//! rest. With `k = 2` the next block is the only remaining one, so validation
//! takes its first half and training the second.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SplitMix64 generator (Steele, Lea & Flood), as used to seed xoshiro.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..bound` by rejection of the biased tail.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let limit = (u64::MAX / bound) * bound;
        loop {
            let x = self.next_u64();
            if x < limit {
                return x % bound;
            }
        }
    }
}

/// Mixes a base seed with extra coordinates into an independent stream seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(SplitMix64::new(seed).next_u64(), |acc, &p| {
        SplitMix64::new(acc ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15)).next_u64()
    })
}

fn shuffle<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldManifest {
    pub seed: u64,
    pub k: usize,
    pub items: Vec<String>,
    pub folds: Vec<Fold>,
}

pub fn make_folds(item_ids: &[String], k: usize, seed: u64) -> Result<FoldManifest> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    if item_ids.len() < 2 * k {
        return Err(Error::TooFewItems { items: item_ids.len(), k, needed: 2 * k });
    }
    let mut seen = BTreeSet::new();
    for id in item_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }

    let mut order: Vec<String> = item_ids.to_vec();
    shuffle(&mut order, &mut SplitMix64::new(seed));
    let n = order.len();
    let blocks: Vec<&[String]> = (0..k).map(|f| &order[f * n / k..(f + 1) * n / k]).collect();

    let sorted = |v: Vec<String>| {
        let mut v = v;
        v.sort();
        v
    };
    let folds = (0..k)
        .map(|f| {
            let next = (f + 1) % k;
            let test = blocks[f].to_vec();
            let (val, mut train): (Vec<String>, Vec<String>) = if k == 2 {
                let half = blocks[next].len().div_ceil(2);
                (blocks[next][..half].to_vec(), blocks[next][half..].to_vec())
            } else {
                (blocks[next].to_vec(), Vec::new())
            };
            if k > 2 {
                for (b, block) in blocks.iter().enumerate() {
                    if b != f && b != next {
                        train.extend(block.iter().cloned());
                    }
                }
            }
            Fold { train: sorted(train), val: sorted(val), test: sorted(test) }
        })
        .collect();

    Ok(FoldManifest { seed, k, items: sorted(item_ids.to_vec()), folds })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    FoldCount { expected: usize, found: usize },
    Overlap { fold: usize, id: String, lists: String },
    DuplicateInList { fold: usize, id: String, list: String },
    UnknownId { fold: usize, id: String },
    MissingFromFold { fold: usize, id: String },
    TestCoverage { id: String, times: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FoldCount { expected, found } => {
                write!(f, "manifest declares k={expected} but holds {found} folds")
            }
            Violation::Overlap { fold, id, lists } => {
                write!(f, "fold {fold}: {id} appears in {lists} (disjointness)")
            }
            Violation::DuplicateInList { fold, id, list } => {
                write!(f, "fold {fold}: {id} repeated in {list}")
            }
            Violation::UnknownId { fold, id } => write!(f, "fold {fold}: unknown id {id}"),
            Violation::MissingFromFold { fold, id } => {
                write!(f, "fold {fold}: {id} not assigned to any role")
            }
            Violation::TestCoverage { id, times } => {
                write!(f, "{id} is tested {times} times across folds (coverage)")
            }
        }
    }
}

/// Checks every manifest invariant; an empty result means the manifest is valid.
pub fn validate_manifest(m: &FoldManifest) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.folds.len() != m.k {
        out.push(Violation::FoldCount { expected: m.k, found: m.folds.len() });
    }
    let items: BTreeSet<&str> = m.items.iter().map(String::as_str).collect();
    let mut tested: BTreeMap<&str, usize> = items.iter().map(|&id| (id, 0)).collect();

    for (fi, fold) in m.folds.iter().enumerate() {
        let mut roles: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (name, list) in [("train", &fold.train), ("val", &fold.val), ("test", &fold.test)] {
            let mut in_list = BTreeSet::new();
            for id in list {
                if !in_list.insert(id.as_str()) {
                    out.push(Violation::DuplicateInList { fold: fi, id: id.clone(), list: name.into() });
                    continue;
                }
                roles.entry(id.as_str()).or_default().push(name);
            }
        }
        for (id, r) in &roles {
            if !items.contains(id) {
                out.push(Violation::UnknownId { fold: fi, id: id.to_string() });
            }
            if r.len() > 1 {
                out.push(Violation::Overlap { fold: fi, id: id.to_string(), lists: r.join("+") });
            }
        }
        for id in &items {
            if !roles.contains_key(id) {
                out.push(Violation::MissingFromFold { fold: fi, id: id.to_string() });
            }
        }
        for id in fold.test.iter().collect::<BTreeSet<_>>() {
            if let Some(c) = tested.get_mut(id.as_str()) {
                *c += 1;
            }
        }
    }
    for (id, times) in tested {
        if times != 1 {
            out.push(Violation::TestCoverage { id: id.to_string(), times });
        }
    }
    out
}

pub fn to_json(m: &FoldManifest) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serialises");
    s.push('\n');
    s
}

pub fn save_manifest(m: &FoldManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(m)).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<FoldManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}
