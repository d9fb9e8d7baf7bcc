//! Class-conditional data generation and pooled sample statistics.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _};
use serde::{Deserialize, Serialize};

use crate::error::{NpError, Result};
use crate::linalg::{Matrix, SpdMatrix, Vector};
use crate::model::{LdaModel, LinearClassifier};
use crate::numerics::{rng_stream, std_normal, SeedSpec};

/// Class-conditional feature distribution around `(μᵃ, Σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureDistribution {
    Gaussian,
    /// Multivariate t with `Σ` as the scale matrix (covariance `Σ·df/(df-2)`).
    StudentT { df: f64 },
}

impl FeatureDistribution {
    pub fn is_gaussian(&self) -> bool {
        matches!(self, FeatureDistribution::Gaussian)
    }
}

/// Observations of both classes, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    x0: Matrix,
    x1: Matrix,
}

impl LabeledSample {
    pub fn new(x0: Matrix, x1: Matrix) -> Result<Self> {
        if x0.ncols() != x1.ncols() {
            return Err(NpError::DimensionMismatch { expected: x0.ncols(), found: x1.ncols() });
        }
        if x0.nrows() == 0 || x1.nrows() == 0 {
            return Err(NpError::InsufficientSamples { needed: 1, got: 0 });
        }
        if x0.iter().chain(x1.iter()).any(|v| !v.is_finite()) {
            return Err(NpError::InvalidData("non-finite feature value".into()));
        }
        Ok(Self { x0, x1 })
    }

    pub fn x0(&self) -> &Matrix {
        &self.x0
    }

    pub fn x1(&self) -> &Matrix {
        &self.x1
    }

    pub fn class(&self, label: u8) -> &Matrix {
        if label == 0 {
            &self.x0
        } else {
            &self.x1
        }
    }

    pub fn n0(&self) -> usize {
        self.x0.nrows()
    }

    pub fn n1(&self) -> usize {
        self.x1.nrows()
    }

    pub fn p(&self) -> usize {
        self.x0.ncols()
    }

    /// Same observations with every row shifted by `t`.
    pub fn translated(&self, t: &Vector) -> Self {
        let shift = |m: &Matrix| {
            let mut out = m.clone();
            for mut row in out.row_iter_mut() {
                row += t.transpose();
            }
            out
        };
        Self { x0: shift(&self.x0), x1: shift(&self.x1) }
    }
}

/// Draws `n` standardized rows: `z` for Gaussian, `z·√(df/χ²_df)` for t.
///
/// Per row the draw order is `p` normals followed (t only) by one chi-square.
fn standardized_rows<R: Rng + ?Sized>(dist: FeatureDistribution, n: usize, p: usize, rng: &mut R) -> Result<Matrix> {
    let chi = match dist {
        FeatureDistribution::Gaussian => None,
        FeatureDistribution::StudentT { df } => {
            if !(df > 0.0) {
                return Err(NpError::InvalidConfig(format!("degrees of freedom {df} must be positive")));
            }
            Some((df, ChiSquared::new(df).map_err(|e| NpError::InvalidConfig(e.to_string()))?))
        }
    };
    let mut data = Vec::with_capacity(n * p);
    let mut row = vec![0.0; p];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = std_normal(rng);
        }
        if let Some((df, chi)) = &chi {
            let scale = (df / chi.sample(rng)).sqrt();
            row.iter_mut().for_each(|v| *v *= scale);
        }
        data.extend_from_slice(&row);
    }
    Ok(Matrix::from_row_slice(n, p, &data))
}

fn affine_rows(z: &Matrix, factor: &Matrix, mu: &Vector) -> Matrix {
    let mut x = z * factor.transpose();
    for mut row in x.row_iter_mut() {
        row += mu.transpose();
    }
    x
}

/// Draws `n0` class-0 rows then `n1` class-1 rows from one seeded stream.
pub fn sample(
    model: &LdaModel,
    dist: FeatureDistribution,
    n0: usize,
    n1: usize,
    seed: SeedSpec,
) -> Result<LabeledSample> {
    let mut rng = rng_stream(seed);
    let p = model.dim();
    let z0 = standardized_rows(dist, n0, p, &mut rng)?;
    let z1 = standardized_rows(dist, n1, p, &mut rng)?;
    let l = model.sigma().cholesky_factor();
    LabeledSample::new(affine_rows(&z0, l, model.mu0()), affine_rows(&z1, l, model.mu1()))
}

/// Rows `μᵃ + L z` with `L` the Cholesky factor of `Σ`.
pub fn sample_gaussian(model: &LdaModel, n0: usize, n1: usize, seed: SeedSpec) -> Result<LabeledSample> {
    sample(model, FeatureDistribution::Gaussian, n0, n1, seed)
}

/// Rows `μᵃ + L z √(df/χ²_df)`.
pub fn sample_student_t(model: &LdaModel, df: f64, n0: usize, n1: usize, seed: SeedSpec) -> Result<LabeledSample> {
    sample(model, FeatureDistribution::StudentT { df }, n0, n1, seed)
}

/// A large held-out sample kept in standardized form.
///
/// Drawn from the same stream layout as [`sample`], so
/// `TestSet::draw(..).materialize()` equals `sample(..)` for the same seed.
/// Scoring a linear classifier only needs `z (Lᵀw) + wᵀμ`, which avoids
/// forming the full feature matrix.
#[derive(Debug, Clone)]
pub struct TestSet {
    z0: Matrix,
    z1: Matrix,
    factor: Matrix,
    mu0: Vector,
    mu1: Vector,
}

impl TestSet {
    pub fn draw(model: &LdaModel, dist: FeatureDistribution, n_per_class: usize, seed: SeedSpec) -> Result<Self> {
        let mut rng = rng_stream(seed);
        let p = model.dim();
        let z0 = standardized_rows(dist, n_per_class, p, &mut rng)?;
        let z1 = standardized_rows(dist, n_per_class, p, &mut rng)?;
        Ok(Self {
            z0,
            z1,
            factor: model.sigma().cholesky_factor().clone(),
            mu0: model.mu0().clone(),
            mu1: model.mu1().clone(),
        })
    }

    pub fn materialize(&self) -> Result<LabeledSample> {
        LabeledSample::new(
            affine_rows(&self.z0, &self.factor, &self.mu0),
            affine_rows(&self.z1, &self.factor, &self.mu1),
        )
    }

    /// Empirical `(type I, type II)`: share of class 0 scored above the
    /// threshold and share of class 1 scored at or below it.
    pub fn errors(&self, clf: &LinearClassifier) -> Result<(f64, f64)> {
        let p = self.factor.nrows();
        if clf.direction.len() != p {
            return Err(NpError::DimensionMismatch { expected: p, found: clf.direction.len() });
        }
        let u = self.factor.tr_mul(&clf.direction);
        let rate = |z: &Matrix, mu: &Vector, positive: bool| {
            let offset = clf.direction.dot(mu);
            let scores = z * &u;
            let hits = scores.iter().filter(|&&s| (s + offset > clf.threshold) == positive).count();
            hits as f64 / z.nrows() as f64
        };
        Ok((rate(&self.z0, &self.mu0, true), rate(&self.z1, &self.mu1, false)))
    }
}

/// Pooled-covariance summary consumed by every LDA-type classifier.
#[derive(Debug, Clone)]
pub struct SampleStats {
    pub mu0_hat: Vector,
    pub mu1_hat: Vector,
    pub mu_d_hat: Vector,
    pub sigma_hat: SpdMatrix,
    /// `Σ̂⁻¹ μ̂_d`
    pub a_hat: Vector,
    pub n0: usize,
    pub n1: usize,
    pub n: usize,
    pub p: usize,
    /// `p / n`
    pub r: f64,
    /// `μ̂_dᵀ Σ̂⁻¹ μ̂_d`
    pub signal: f64,
    /// `‖v₁‖² = n/n0 + n/n1 = n²/(n0 n1)`
    pub v1_norm_sq: f64,
}

impl SampleStats {
    /// `v₁ᵀ e₀ = -√(n/n0)`.
    pub fn v1_dot_e0(&self) -> f64 {
        -(self.n as f64 / self.n0 as f64).sqrt()
    }

    /// Copy with the aspect ratio replaced; used to probe the `r → 0` limit.
    pub fn with_ratio(&self, r: f64) -> Self {
        Self { r, ..self.clone() }
    }
}

fn column_means(x: &Matrix) -> Vector {
    x.row_mean().transpose()
}

fn centered(x: &Matrix, mean: &Vector) -> Matrix {
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    c
}

/// Class means, pooled covariance with divisor `n0 + n1 - 2`, and `Â`.
pub fn compute_stats(sample: &LabeledSample) -> Result<SampleStats> {
    let (n0, n1, p) = (sample.n0(), sample.n1(), sample.p());
    if n0 < 2 || n1 < 2 {
        return Err(NpError::InsufficientSamples { needed: 2, got: n0.min(n1) });
    }
    let n = n0 + n1;
    if n - 2 < p {
        return Err(NpError::InsufficientSamples { needed: p + 2, got: n });
    }
    let mu0_hat = column_means(sample.x0());
    let mu1_hat = column_means(sample.x1());
    let c0 = centered(sample.x0(), &mu0_hat);
    let c1 = centered(sample.x1(), &mu1_hat);
    let scatter = c0.tr_mul(&c0) + c1.tr_mul(&c1);
    let sigma_hat = SpdMatrix::new(scatter / (n - 2) as f64)?;
    let mu_d_hat = &mu1_hat - &mu0_hat;
    let a_hat = sigma_hat.solve(&mu_d_hat)?;
    let signal = mu_d_hat.dot(&a_hat);
    let (nf, n0f, n1f) = (n as f64, n0 as f64, n1 as f64);
    Ok(SampleStats {
        mu0_hat,
        mu1_hat,
        mu_d_hat,
        sigma_hat,
        a_hat,
        n0,
        n1,
        n,
        p,
        r: p as f64 / nf,
        signal,
        v1_norm_sq: nf / n0f + nf / n1f,
    })
}
