//! Average rankings and the correlated Bayesian t-test for cross-validated scores.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folds::derive_seed;

pub const DEFAULT_ROPE: f64 = 0.01;
pub const DEFAULT_SAMPLES: usize = 50_000;

/// Ranks scores from best (1) to worst (n). Tied scores share the mean of the
/// ranks they span, so the output always sums to `n(n+1)/2`.
pub fn rank_with_ties(scores: &[f64], higher_is_better: bool) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("no scores to rank".into()));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NanScore(i));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let o = scores[a].partial_cmp(&scores[b]).expect("no NaN");
        if higher_is_better { o.reverse() } else { o }
    });
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    Ok(ranks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub mean: f64,
    pub per_fold: Vec<f64>,
}

impl GridCell {
    pub fn new(per_fold: Vec<f64>) -> Self {
        let mean = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
        Self { mean, per_fold }
    }
}

/// Fold scores for every architecture × encoder pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGrid {
    pub architectures: Vec<String>,
    pub encoders: Vec<String>,
    /// `cells[architecture][encoder]`
    pub cells: Vec<Vec<Option<GridCell>>>,
}

impl ScoreGrid {
    pub fn new(architectures: Vec<String>, encoders: Vec<String>) -> Self {
        let cells = vec![vec![None; encoders.len()]; architectures.len()];
        Self { architectures, encoders, cells }
    }

    pub fn set(&mut self, architecture: &str, encoder: &str, per_fold: Vec<f64>) -> Result<()> {
        let a = self.arch_index(architecture)?;
        let e = self.encoder_index(encoder)?;
        if per_fold.is_empty() {
            return Err(Error::Empty(format!("no fold scores for {architecture}/{encoder}")));
        }
        self.cells[a][e] = Some(GridCell::new(per_fold));
        Ok(())
    }

    fn arch_index(&self, name: &str) -> Result<usize> {
        self.architectures
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown architecture {name}")))
    }

    fn encoder_index(&self, name: &str) -> Result<usize> {
        self.encoders
            .iter()
            .position(|e| e == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown encoder {name}")))
    }

    pub fn cell(&self, architecture: usize, encoder: usize) -> Option<&GridCell> {
        self.cells[architecture][encoder].as_ref()
    }

    pub fn mean(&self, architecture: usize, encoder: usize) -> Option<f64> {
        self.cell(architecture, encoder).map(|c| c.mean)
    }

    /// Names of empty cells as `architecture/encoder`.
    pub fn missing(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (a, row) in self.cells.iter().enumerate() {
            for (e, c) in row.iter().enumerate() {
                if c.is_none() {
                    out.push(format!("{}/{}", self.architectures[a], self.encoders[e]));
                }
            }
        }
        out
    }

    /// Fails unless every cell is present with the same number of folds.
    pub fn require_complete(&self) -> Result<usize> {
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(Error::MissingCells(missing));
        }
        if self.architectures.is_empty() || self.encoders.is_empty() {
            return Err(Error::Empty("score grid has no rows or columns".into()));
        }
        let k = self.cells[0][0].as_ref().map_or(0, |c| c.per_fold.len());
        for (a, row) in self.cells.iter().enumerate() {
            for (e, c) in row.iter().enumerate() {
                let n = c.as_ref().map_or(0, |c| c.per_fold.len());
                if n != k {
                    return Err(Error::InvalidParameter(format!(
                        "{}/{} has {n} fold scores, expected {k}",
                        self.architectures[a], self.encoders[e]
                    )));
                }
            }
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankAxis {
    /// Rank architectures within each encoder, average over encoders.
    ArchitecturesOverEncoders,
    /// Rank encoders within each architecture, average over architectures.
    EncodersOverArchitectures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRank {
    pub name: String,
    pub mean_rank: f64,
}

/// Mean tie-aware rank per name, ascending (lower is better); equal means keep name order.
pub fn average_rankings(grid: &ScoreGrid, axis: RankAxis) -> Result<Vec<MeanRank>> {
    grid.require_complete()?;
    let (names, slices) = match axis {
        RankAxis::ArchitecturesOverEncoders => (&grid.architectures, grid.encoders.len()),
        RankAxis::EncodersOverArchitectures => (&grid.encoders, grid.architectures.len()),
    };
    let mut totals = vec![0.0; names.len()];
    for s in 0..slices {
        let scores: Vec<f64> = (0..names.len())
            .map(|i| match axis {
                RankAxis::ArchitecturesOverEncoders => grid.mean(i, s),
                RankAxis::EncodersOverArchitectures => grid.mean(s, i),
            })
            .map(|m| m.expect("complete grid"))
            .collect();
        for (t, r) in totals.iter_mut().zip(rank_with_ties(&scores, true)?) {
            *t += r;
        }
    }
    let mut out: Vec<MeanRank> = names
        .iter()
        .zip(totals)
        .map(|(n, t)| MeanRank { name: n.clone(), mean_rank: t / slices as f64 })
        .collect();
    out.sort_by(|a, b| {
        a.mean_rank
            .partial_cmp(&b.mean_rank)
            .expect("finite ranks")
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Student-t distribution function

/// Lanczos approximation (g = 7, n = 9) of `ln Γ(x)` for `x > 0`.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularised incomplete beta `I_x(a, b)`.
fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// `P(T > t)` for a standard Student-t variable with `df` degrees of freedom.
pub fn student_t_upper_tail(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    if t >= 0.0 {
        0.5 * inc_beta(0.5 * df, 0.5, df / (df + t * t))
    } else {
        1.0 - student_t_upper_tail(-t, df)
    }
}

/// `P(T <= t)` for a standard Student-t variable.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    student_t_upper_tail(-t, df)
}

// ---------------------------------------------------------------------------
// Correlated Bayesian t-test

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesParams {
    /// Half-width of the region of practical equivalence.
    pub rope: f64,
    /// Correlation between folds; the test-set fraction `1/k` is standard.
    pub rho: f64,
    pub n_samples: usize,
}

impl Default for BayesParams {
    fn default() -> Self {
        Self { rope: DEFAULT_ROPE, rho: 0.1, n_samples: DEFAULT_SAMPLES }
    }
}

impl BayesParams {
    /// Defaults with `rho` set to the test fraction of `k`-fold validation.
    pub fn for_folds(k: usize) -> Self {
        Self { rho: 1.0 / k as f64, ..Self::default() }
    }
}

/// Student-t posterior of the mean score difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub df: f64,
    pub location: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    pub p_left: f64,
    pub p_rope: f64,
    pub p_right: f64,
}

impl Probabilities {
    pub fn sum(&self) -> f64 {
        self.p_left + self.p_rope + self.p_right
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesTest {
    pub posterior: Posterior,
    pub monte_carlo: Probabilities,
    pub closed_form: Probabilities,
}

/// Posterior of the mean of `a - b` under the correlation-corrected t model.
pub fn posterior(a: &[f64], b: &[f64], rho: f64) -> Result<Posterior> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "fold score lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let k = a.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    if let Some(i) = a.iter().chain(b).position(|v| !v.is_finite()) {
        return Err(Error::NanScore(i % k));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let kf = k as f64;
    let mean = diffs.iter().sum::<f64>() / kf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (kf - 1.0);
    Ok(Posterior {
        df: kf - 1.0,
        location: mean,
        scale: ((1.0 / kf + rho / (1.0 - rho)) * var).sqrt(),
    })
}

fn degenerate(location: f64, rope: f64) -> Probabilities {
    let (p_left, p_rope, p_right) = if location < -rope {
        (1.0, 0.0, 0.0)
    } else if location > rope {
        (0.0, 0.0, 1.0)
    } else {
        (0.0, 1.0, 0.0)
    };
    Probabilities { p_left, p_rope, p_right }
}

/// Exact posterior mass below `-rope`, inside `[-rope, rope]` and above `rope`.
pub fn closed_form(post: &Posterior, rope: f64) -> Probabilities {
    if post.scale == 0.0 {
        return degenerate(post.location, rope);
    }
    let p_left = student_t_upper_tail((rope + post.location) / post.scale, post.df);
    let p_right = student_t_upper_tail((rope - post.location) / post.scale, post.df);
    let p_rope = (1.0 - (p_left + p_right)).max(0.0);
    Probabilities { p_left, p_rope, p_right }
}

/// Fractions of seeded posterior draws falling in each region.
pub fn monte_carlo(post: &Posterior, rope: f64, n_samples: usize, seed: u64) -> Probabilities {
    if post.scale == 0.0 {
        return degenerate(post.location, rope);
    }
    let dist = StudentT::new(post.df).expect("df >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut left, mut right) = (0usize, 0usize);
    for _ in 0..n_samples {
        let x = post.location + post.scale * dist.sample(&mut rng);
        if x < -rope {
            left += 1;
        } else if x > rope {
            right += 1;
        }
    }
    let n = n_samples as f64;
    Probabilities {
        p_left: left as f64 / n,
        p_rope: (n_samples - left - right) as f64 / n,
        p_right: right as f64 / n,
    }
}

/// Correlated Bayesian t-test on paired fold scores.
///
/// The posterior is over the mean of `a_i - b_i`, so `p_left` is the mass
/// where `b` beats `a` by more than `rope` and `p_right` the mass where `a`
/// beats `b`. Both the seeded Monte Carlo estimate and the exact values from
/// the Student-t distribution function are returned.
pub fn correlated_bayes_ttest(a: &[f64], b: &[f64], params: &BayesParams, seed: u64) -> Result<BayesTest> {
    if !(params.rope >= 0.0) || !params.rope.is_finite() {
        return Err(Error::InvalidParameter(format!("rope must be non-negative, got {}", params.rope)));
    }
    if params.n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let post = posterior(a, b, params.rho)?;
    Ok(BayesTest {
        posterior: post,
        monte_carlo: monte_carlo(&post, params.rope, params.n_samples, seed),
        closed_form: closed_form(&post, params.rope),
    })
}

/// One off-diagonal comparison between a row and a column method.
///
/// `p_left` is the probability that the row method outperforms the column
/// method, `p_right` the converse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesResult {
    pub row: String,
    pub col: String,
    pub rope: f64,
    pub rho: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub posterior: Posterior,
    pub closed_form: Probabilities,
    pub monte_carlo: Probabilities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesMatrix {
    pub methods: Vec<String>,
    /// Row-major off-diagonal cells; the diagonal is omitted.
    pub cells: Vec<BayesResult>,
}

impl BayesMatrix {
    pub fn get(&self, row: usize, col: usize) -> Option<&BayesResult> {
        let (r, c) = (&self.methods[row], &self.methods[col]);
        self.cells.iter().find(|x| &x.row == r && &x.col == c)
    }
}

/// Runs the test for every ordered pair of distinct methods.
///
/// Cell `(i, j)` uses its own stream seeded from `(seed, i, j)`, so the
/// result does not depend on evaluation order.
pub fn pairwise_matrix(methods: &[(String, Vec<f64>)], params: &BayesParams, seed: u64) -> Result<BayesMatrix> {
    if methods.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "pairwise comparison needs at least 2 methods, got {}",
            methods.len()
        )));
    }
    let n = methods.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (row, row_scores) = &methods[i];
            let (col, col_scores) = &methods[j];
            let cell_seed = derive_seed(seed, &[i as u64, j as u64]);
            // difference column - row: mass below -rope is where the row wins
            correlated_bayes_ttest(col_scores, row_scores, params, cell_seed)
                .map(|t| BayesResult {
                    row: row.clone(),
                    col: col.clone(),
                    rope: params.rope,
                    rho: params.rho,
                    n_samples: params.n_samples,
                    seed: cell_seed,
                    posterior: t.posterior,
                    closed_form: t.closed_form,
                    monte_carlo: t.monte_carlo,
                })
                .map_err(|e| Error::Pair { a: row.clone(), b: col.clone(), source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BayesMatrix { methods: methods.iter().map(|(n, _)| n.clone()).collect(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn rank_examples() {
        assert_eq!(rank_with_ties(&[0.9, 0.9, 0.5], true).unwrap(), vec![1.5, 1.5, 3.0]);
        assert_eq!(rank_with_ties(&[0.1, 0.2, 0.3], true).unwrap(), vec![3.0, 2.0, 1.0]);
        assert_eq!(rank_with_ties(&[0.4; 4], true).unwrap(), vec![2.5; 4]);
        assert_eq!(rank_with_ties(&[0.1, 0.2, 0.3], false).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(rank_with_ties(&[0.1, f64::NAN], true), Err(Error::NanScore(1))));
        assert!(rank_with_ties(&[], true).is_err());
    }

    fn grid(values: &[&[f64]], archs: &[&str], encs: &[&str]) -> ScoreGrid {
        let mut g = ScoreGrid::new(archs.iter().map(|s| s.to_string()).collect(), encs.iter().map(|s| s.to_string()).collect());
        for (a, row) in values.iter().enumerate() {
            for (e, v) in row.iter().enumerate() {
                g.set(archs[a], encs[e], vec![*v, *v]).unwrap();
            }
        }
        g
    }

    #[test]
    fn average_ranking_examples() {
        let g = grid(&[&[0.8, 0.7], &[0.5, 0.4]], &["unet", "pspnet"], &["r50", "b5"]);
        let r = average_rankings(&g, RankAxis::ArchitecturesOverEncoders).unwrap();
        assert_eq!(r[0], MeanRank { name: "unet".into(), mean_rank: 1.0 });
        assert_eq!(r[1], MeanRank { name: "pspnet".into(), mean_rank: 2.0 });

        let g = grid(&[&[0.8, 0.4], &[0.5, 0.7]], &["a", "b"], &["x", "y"]);
        let r = average_rankings(&g, RankAxis::ArchitecturesOverEncoders).unwrap();
        assert!(r.iter().all(|m| m.mean_rank == 1.5));

        let mut g = ScoreGrid::new(vec!["a".into()], vec!["x".into(), "y".into()]);
        g.set("a", "x", vec![0.1]).unwrap();
        match average_rankings(&g, RankAxis::EncodersOverArchitectures) {
            Err(Error::MissingCells(m)) => assert_eq!(m, vec!["a/y".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn average_rankings_match_two_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let archs: Vec<String> = (0..5).map(|i| format!("arch{i}")).collect();
        let encs: Vec<String> = (0..14).map(|i| format!("enc{i:02}")).collect();
        let mut g = ScoreGrid::new(archs.clone(), encs.clone());
        let mut m = vec![vec![0.0; 14]; 5];
        for a in 0..5 {
            for e in 0..14 {
                // coarse values so ties occur
                let v = f64::from(rng.random_range(0..6u8)) / 10.0;
                m[a][e] = v;
                g.set(&archs[a], &encs[e], vec![v]).unwrap();
            }
        }
        let got = average_rankings(&g, RankAxis::ArchitecturesOverEncoders).unwrap();
        for a in 0..5 {
            let mut total = 0.0;
            for e in 0..14 {
                let better = (0..5).filter(|&o| m[o][e] > m[a][e]).count() as f64;
                let equal = (0..5).filter(|&o| m[o][e] == m[a][e]).count() as f64;
                total += better + (equal + 1.0) / 2.0;
            }
            let r = got.iter().find(|r| r.name == archs[a]).unwrap();
            assert_abs_diff_eq!(r.mean_rank, total / 14.0, epsilon = 1e-12);
        }
        assert!(got.windows(2).all(|w| w[0].mean_rank <= w[1].mean_rank));
    }

    #[test]
    fn cdf_matches_statrs() {
        for df in [1.0, 2.0, 4.0, 9.0, 29.0] {
            let reference = StudentsT::new(0.0, 1.0, df).unwrap();
            for t in [-40.0, -6.5, -2.0, -0.3, 0.0, 0.01, 1.0, 2.5, 7.0, 100.0] {
                assert_abs_diff_eq!(student_t_cdf(t, df), reference.cdf(t), epsilon = 1e-12);
            }
        }
        assert_eq!(student_t_cdf(0.0, 9.0), 0.5);
    }

    #[test]
    fn zero_differences_fall_in_rope() {
        let a = [0.7, 0.71, 0.69, 0.72, 0.7, 0.68, 0.7, 0.73, 0.71, 0.7];
        let t = correlated_bayes_ttest(&a, &a, &BayesParams::default(), 1).unwrap();
        let exact = Probabilities { p_left: 0.0, p_rope: 1.0, p_right: 0.0 };
        assert_eq!(t.closed_form, exact);
        assert_eq!(t.monte_carlo, exact);
    }

    #[test]
    fn constant_offset_outside_rope() {
        let a = [0.5; 5];
        let b = [0.4; 5];
        let t = correlated_bayes_ttest(&a, &b, &BayesParams::default(), 1).unwrap();
        assert_eq!(t.closed_form, Probabilities { p_left: 0.0, p_rope: 0.0, p_right: 1.0 });
        let t = correlated_bayes_ttest(&b, &a, &BayesParams::default(), 1).unwrap();
        assert_eq!(t.closed_form, Probabilities { p_left: 1.0, p_rope: 0.0, p_right: 0.0 });
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = BayesParams::default();
        assert!(correlated_bayes_ttest(&[0.1], &[0.2], &p, 0).is_err());
        assert!(correlated_bayes_ttest(&[0.1, 0.2], &[0.2], &p, 0).is_err());
        for rho in [0.0, 1.0, -0.5] {
            assert!(correlated_bayes_ttest(&[0.1, 0.2], &[0.2, 0.3], &BayesParams { rho, ..p }, 0).is_err());
        }
        assert!(correlated_bayes_ttest(&[0.1, 0.2], &[0.2, 0.3], &BayesParams { rope: -0.1, ..p }, 0).is_err());
    }

    #[test]
    fn posterior_scale_formula() {
        let a = [0.3, 0.5, 0.4, 0.6];
        let b = [0.1, 0.2, 0.3, 0.2];
        let post = posterior(&a, &b, 0.25).unwrap();
        // diffs 0.2, 0.3, 0.1, 0.4: mean 0.25, sample variance 0.05/3
        assert_abs_diff_eq!(post.location, 0.25, epsilon = 1e-15);
        assert_eq!(post.df, 3.0);
        let var: f64 = 0.05 / 3.0;
        assert_abs_diff_eq!(post.scale, ((0.25 + 0.25 / 0.75) * var).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn closed_form_against_statrs_location_scale() {
        let a = [0.62, 0.65, 0.6, 0.7, 0.66, 0.64, 0.61, 0.69, 0.67, 0.63];
        let b = [0.6, 0.62, 0.61, 0.64, 0.63, 0.6, 0.6, 0.65, 0.62, 0.61];
        let t = correlated_bayes_ttest(&a, &b, &BayesParams::default(), 3).unwrap();
        let p = t.posterior;
        let d = StudentsT::new(p.location, p.scale, p.df).unwrap();
        assert_abs_diff_eq!(t.closed_form.p_left, d.cdf(-0.01), epsilon = 1e-12);
        assert_abs_diff_eq!(t.closed_form.p_right, 1.0 - d.cdf(0.01), epsilon = 1e-12);
    }

    #[test]
    fn pairwise_examples() {
        let p = BayesParams { n_samples: 5_000, ..BayesParams::default() };
        let same = vec![0.5, 0.52, 0.49, 0.51];
        let m = pairwise_matrix(&[("a".into(), same.clone()), ("b".into(), same.clone())], &p, 0).unwrap();
        assert_eq!(m.cells.len(), 2);
        assert!(m.cells.iter().all(|c| c.closed_form.p_rope == 1.0));

        let methods = vec![
            ("good".to_string(), vec![0.80, 0.82, 0.79, 0.81, 0.83]),
            ("mid".to_string(), vec![0.60, 0.63, 0.61, 0.62, 0.58]),
            ("bad".to_string(), vec![0.30, 0.33, 0.31, 0.29, 0.35]),
        ];
        let m = pairwise_matrix(&methods, &p, 7).unwrap();
        assert_eq!(m.cells.len(), 6);
        for i in 0..3 {
            assert!(m.get(i, i).is_none());
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let (c, t) = (m.get(i, j).unwrap(), m.get(j, i).unwrap());
                assert_eq!(c.closed_form.p_left, t.closed_form.p_right);
                assert_eq!(c.closed_form.p_right, t.closed_form.p_left);
                // earlier methods have higher scores
                let row_better = c.closed_form.p_left > c.closed_form.p_right;
                assert_eq!(row_better, i < j);
            }
        }

        assert!(pairwise_matrix(&methods[..1], &p, 0).is_err());
        let bad = vec![("x".to_string(), vec![0.1]), ("y".to_string(), vec![0.2])];
        match pairwise_matrix(&bad, &p, 0) {
            Err(Error::Pair { a, b, .. }) => assert_ne!(a, b),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pairwise_is_deterministic() {
        let p = BayesParams { n_samples: 2_000, ..BayesParams::default() };
        let methods: Vec<(String, Vec<f64>)> = (0..4)
            .map(|i| (format!("m{i}"), (0..10).map(|f| 0.5 + 0.01 * ((i * 7 + f * 3) % 5) as f64).collect()))
            .collect();
        assert_eq!(pairwise_matrix(&methods, &p, 5).unwrap(), pairwise_matrix(&methods, &p, 5).unwrap());
    }

    proptest! {
        #[test]
        fn ranks_sum_and_monotone_invariance(v in proptest::collection::vec(0u8..20, 1..30)) {
            let scores: Vec<f64> = v.iter().map(|&x| f64::from(x) / 20.0).collect();
            let r = rank_with_ties(&scores, true).unwrap();
            let n = scores.len() as f64;
            prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 1.0).collect();
            prop_assert_eq!(rank_with_ties(&transformed, true).unwrap(), r);
        }

        #[test]
        fn closed_form_partition_and_swap(
            a in proptest::collection::vec(0.0f64..1.0, 10),
            b in proptest::collection::vec(0.0f64..1.0, 10),
            rope in 0.0f64..0.1,
        ) {
            let p = BayesParams { rope, n_samples: 1, ..BayesParams::default() };
            let ab = correlated_bayes_ttest(&a, &b, &p, 0).unwrap().closed_form;
            let ba = correlated_bayes_ttest(&b, &a, &p, 0).unwrap().closed_form;
            prop_assert!((ab.sum() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(ab.p_left, ba.p_right);
            prop_assert_eq!(ab.p_right, ba.p_left);
            prop_assert_eq!(ab.p_rope, ba.p_rope);
        }

        #[test]
        fn location_shift_equivariance(
            a in proptest::collection::vec(0.0f64..1.0, 10),
            b in proptest::collection::vec(0.0f64..1.0, 10),
            c in -0.5f64..0.5,
        ) {
            let base = posterior(&a, &b, 0.1).unwrap();
            let shifted: Vec<f64> = a.iter().map(|x| x + c).collect();
            let moved = posterior(&shifted, &b, 0.1).unwrap();
            prop_assert!((moved.location - base.location - c).abs() <= 1e-12);
            prop_assert!((moved.scale - base.scale).abs() <= 1e-12);
        }
    }
}
