//! Neyman-Pearson classifiers: eLDA, feLDA and the sample-splitting umbrella.

mod lda;
mod umbrella;

pub use lda::{elda_center, elda_train, elda_variance, felda_center, felda_train, felda_variance, VarianceBreakdown};
pub use umbrella::{
    umbrella_min_size, umbrella_order, umbrella_train, LdaScorer, LinearScore, ScoredClassifier, Scorer,
    ScoringFunction, UmbrellaOrder, DEFAULT_SPLIT_FRAC,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Vector;
use crate::model::LinearClassifier;
use crate::numerics::Probability;

/// Target type I error `alpha` and violation probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLevels")]
pub struct NpLevels {
    pub alpha: Probability,
    pub delta: Probability,
}

#[derive(Deserialize)]
struct RawLevels {
    alpha: f64,
    delta: f64,
}

impl TryFrom<RawLevels> for NpLevels {
    type Error = crate::error::NpError;

    fn try_from(raw: RawLevels) -> Result<Self> {
        Self::new(raw.alpha, raw.delta)
    }
}

impl NpLevels {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        Ok(Self { alpha: Probability::open(alpha)?, delta: Probability::open(delta)? })
    }
}

/// Anything that labels a point as `1(score(x) > threshold)`.
pub trait Classify {
    fn score(&self, x: &Vector) -> Result<f64>;

    fn threshold(&self) -> f64;

    fn predict(&self, x: &Vector) -> Result<u8> {
        Ok(u8::from(self.score(x)? > self.threshold()))
    }
}

impl Classify for LinearClassifier {
    fn score(&self, x: &Vector) -> Result<f64> {
        LinearClassifier::score(self, x)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

pub fn predict<C: Classify + ?Sized>(clf: &C, x: &Vector) -> Result<u8> {
    clf.predict(x)
}
