//! Sample-splitting NP umbrella: a score threshold chosen as an order
//! statistic of held-out class-0 scores.

use rand::seq::index;

use crate::error::{NpError, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::LinearClassifier;
use crate::numerics::{binom_upper_tail, rng_stream, Probability, SeedSpec};
use crate::sampling::{compute_stats, LabeledSample};

use super::{Classify, NpLevels};

/// Share of class 0 held out for threshold selection.
pub const DEFAULT_SPLIT_FRAC: f64 = 0.5;

/// Smallest `m` with `(1 − α)^m ≤ δ`.
pub fn umbrella_min_size(alpha: Probability, delta: Probability) -> Result<u64> {
    let (a, d) = (alpha.get(), delta.get());
    if !(a > 0.0 && a < 1.0) {
        return Err(NpError::InvalidLevel(a));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(NpError::InvalidLevel(d));
    }
    let q = 1.0 - a;
    // ceil(log δ / log(1-α)), then nudge across rounding at exact powers
    let mut m = (d.ln() / q.ln()).ceil().max(1.0) as u64;
    while m > 1 && q.powi((m - 1) as i32) <= d {
        m -= 1;
    }
    while q.powi(m as i32) > d {
        m += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UmbrellaOrder {
    /// 1-based rank in the ascending order of held-out scores.
    Order(u64),
    Infeasible,
}

/// `min{k ∈ [1, m] : P(Bin(m, 1 − α) ≥ k) ≤ δ}`.
pub fn umbrella_order(m: u64, levels: NpLevels) -> UmbrellaOrder {
    let q = 1.0 - levels.alpha.get();
    let delta = levels.delta.get();
    if m == 0 || binom_upper_tail(m, m, q) > delta {
        return UmbrellaOrder::Infeasible;
    }
    // the tail is nonincreasing in k: bisect for the first k that passes
    let (mut lo, mut hi) = (1u64, m);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if binom_upper_tail(m, mid, q) <= delta {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    UmbrellaOrder::Order(lo)
}

/// A fitted scoring rule `x ↦ s(x)`.
pub trait ScoringFunction {
    fn score(&self, x: &Vector) -> Result<f64>;

    /// `Some(w)` when `s(x) = wᵀx`, allowing closed-form error evaluation.
    fn linear_direction(&self) -> Option<&Vector> {
        None
    }
}

/// A procedure that fits a scoring rule on labelled data.
pub trait Scorer {
    type Fitted: ScoringFunction;

    fn fit(&self, sample: &LabeledSample) -> Result<Self::Fitted>;
}

/// Linear score `wᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScore {
    pub direction: Vector,
}

impl ScoringFunction for LinearScore {
    fn score(&self, x: &Vector) -> Result<f64> {
        if x.len() != self.direction.len() {
            return Err(NpError::DimensionMismatch { expected: self.direction.len(), found: x.len() });
        }
        Ok(self.direction.dot(x))
    }

    fn linear_direction(&self) -> Option<&Vector> {
        Some(&self.direction)
    }
}

/// Plug-in LDA direction `Σ̂⁻¹ μ̂_d`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LdaScorer;

impl Scorer for LdaScorer {
    type Fitted = LinearScore;

    fn fit(&self, sample: &LabeledSample) -> Result<LinearScore> {
        Ok(LinearScore { direction: compute_stats(sample)?.a_hat })
    }
}

/// A scoring rule thresholded at a held-out order statistic.
#[derive(Debug, Clone)]
pub struct ScoredClassifier<F> {
    pub scorer: F,
    pub threshold: f64,
    pub k_star: u64,
    pub held_out: u64,
}

impl<F: ScoringFunction> ScoredClassifier<F> {
    /// The equivalent [`LinearClassifier`] when the score is linear.
    pub fn as_linear(&self) -> Option<LinearClassifier> {
        let w = self.scorer.linear_direction()?;
        LinearClassifier::new(w.clone(), self.threshold).ok()
    }
}

impl<F: ScoringFunction> Classify for ScoredClassifier<F> {
    fn score(&self, x: &Vector) -> Result<f64> {
        self.scorer.score(x)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

fn select_rows(x: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Holds out `round(split_frac · n0)` class-0 rows chosen uniformly at random,
/// fits `scorer` on the rest and thresholds at the `k*`-th smallest held-out
/// score.
pub fn umbrella_train<S: Scorer>(
    sample: &LabeledSample,
    levels: NpLevels,
    split_frac: f64,
    scorer: &S,
    seed: SeedSpec,
) -> Result<ScoredClassifier<S::Fitted>> {
    if !(split_frac > 0.0 && split_frac < 1.0) {
        return Err(NpError::InvalidConfig(format!("split fraction {split_frac} outside (0, 1)")));
    }
    let n0 = sample.n0();
    let m = (split_frac * n0 as f64).round() as usize;
    let needed = umbrella_min_size(levels.alpha, levels.delta)?;
    if (m as u64) < needed {
        return Err(NpError::InsufficientSamples { needed: needed as usize, got: m });
    }
    if m >= n0 {
        return Err(NpError::InsufficientSamples { needed: m + 1, got: n0 });
    }
    let k_star = match umbrella_order(m as u64, levels) {
        UmbrellaOrder::Order(k) => k,
        UmbrellaOrder::Infeasible => return Err(NpError::InsufficientSamples { needed: needed as usize, got: m }),
    };

    let mut rng = rng_stream(seed);
    let mut in_held_out = vec![false; n0];
    for i in index::sample(&mut rng, n0, m) {
        in_held_out[i] = true;
    }
    let held_out: Vec<usize> = (0..n0).filter(|&i| in_held_out[i]).collect();
    let kept: Vec<usize> = (0..n0).filter(|&i| !in_held_out[i]).collect();

    let train = LabeledSample::new(select_rows(sample.x0(), &kept), sample.x1().clone())?;
    let fitted = scorer.fit(&train)?;
    let mut scores = held_out
        .iter()
        .map(|&i| fitted.score(&sample.x0().row(i).transpose()))
        .collect::<Result<Vec<f64>>>()?;
    scores.sort_by(f64::total_cmp);
    let threshold = scores[(k_star - 1) as usize];
    Ok(ScoredClassifier { scorer: fitted, threshold, k_star, held_out: m as u64 })
}
