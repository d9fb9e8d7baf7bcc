//! Neyman-Pearson linear discriminant analysis in the regime where the
//! feature dimension grows with the sample size.
//!
//! The crate provides the eLDA and feLDA classifiers (type I error control at
//! level `alpha` with probability at least `1 - delta`), the sample-splitting
//! umbrella baseline, Marchenko-Pastur helpers used to verify the asymptotic
//! expansions, and a deterministic simulation harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the nonpositive case.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod numerics;
pub mod rmt;
pub mod sampling;
pub mod screening;

pub use classifiers::{elda_train, felda_train, umbrella_train, Classify, NpLevels};
pub use error::{NpError, Result};
pub use linalg::{Matrix, SpdMatrix, Vector};
pub use model::{LdaModel, LinearClassifier};
pub use numerics::{Probability, SeedSpec};
pub use sampling::{compute_stats, FeatureDistribution, LabeledSample, SampleStats, TestSet};
