//! Population LDA model, the NP oracle, and closed-form error rates.

use log::warn;

use crate::error::{NpError, Result};
use crate::linalg::{ar1_matrix, SpdMatrix, Vector};
use crate::numerics::{std_normal_cdf, std_normal_quantile, Probability};

/// Mahalanobis separations below this are flagged as degenerate.
pub const DEGENERATE_SEPARATION: f64 = 1e-6;

/// Two Gaussian classes `N(mu0, Σ)` and `N(mu1, Σ)`.
#[derive(Debug, Clone)]
pub struct LdaModel {
    mu0: Vector,
    mu1: Vector,
    sigma: SpdMatrix,
    /// `Σ⁻¹ (mu1 - mu0)`
    beta: Vector,
    mahalanobis: f64,
}

impl LdaModel {
    pub fn new(mu0: Vector, mu1: Vector, sigma: SpdMatrix) -> Result<Self> {
        let p = sigma.dim();
        for v in [&mu0, &mu1] {
            if v.len() != p {
                return Err(NpError::DimensionMismatch { expected: p, found: v.len() });
            }
        }
        let mu_d = &mu1 - &mu0;
        let beta = sigma.solve(&mu_d)?;
        let mahalanobis = mu_d.dot(&beta).max(0.0);
        if mahalanobis < DEGENERATE_SEPARATION {
            warn!("Mahalanobis separation {mahalanobis:.3e} is degenerate");
        }
        Ok(Self { mu0, mu1, sigma, beta, mahalanobis })
    }

    /// Model with `mu0 = 0` and `mu1 = Σ β`.
    pub fn from_beta(beta: &Vector, sigma: SpdMatrix) -> Result<Self> {
        let mu_d = beta_to_mu_d(beta, &sigma)?;
        Self::new(Vector::zeros(sigma.dim()), mu_d, sigma)
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn mu0(&self) -> &Vector {
        &self.mu0
    }

    pub fn mu1(&self) -> &Vector {
        &self.mu1
    }

    pub fn mu(&self, class: u8) -> &Vector {
        if class == 0 {
            &self.mu0
        } else {
            &self.mu1
        }
    }

    pub fn mu_d(&self) -> Vector {
        &self.mu1 - &self.mu0
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    /// Bayes direction `Σ⁻¹ μ_d`.
    pub fn beta(&self) -> &Vector {
        &self.beta
    }

    /// `Δ_d = μ_dᵀ Σ⁻¹ μ_d`.
    pub fn mahalanobis(&self) -> f64 {
        self.mahalanobis
    }
}

/// Predicts class 1 iff `directionᵀ x > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub direction: Vector,
    pub threshold: f64,
}

impl LinearClassifier {
    pub fn new(direction: Vector, threshold: f64) -> Result<Self> {
        if direction.iter().any(|v| !v.is_finite()) || direction.iter().all(|&v| v == 0.0) {
            return Err(NpError::InvalidData("classifier direction must be finite and nonzero".into()));
        }
        Ok(Self { direction, threshold })
    }

    pub fn score(&self, x: &Vector) -> Result<f64> {
        if x.len() != self.direction.len() {
            return Err(NpError::DimensionMismatch { expected: self.direction.len(), found: x.len() });
        }
        Ok(self.direction.dot(x))
    }

    /// Strict inequality: points on the boundary go to class 0.
    pub fn predict(&self, x: &Vector) -> Result<u8> {
        Ok(u8::from(self.score(x)? > self.threshold))
    }
}

/// Level-α NP oracle `1(βᵀx > √Δ_d Φ⁻¹(1-α) + βᵀμ⁰)`.
///
/// A degenerate model (`μ_d = 0`) has no usable direction; the first basis
/// vector is substituted so the classifier stays well formed.
pub fn oracle_classifier(model: &LdaModel, alpha: Probability) -> Result<LinearClassifier> {
    let z = std_normal_quantile(1.0 - alpha.get())?;
    let threshold = model.mahalanobis().sqrt() * z + model.beta().dot(model.mu0());
    let direction = if model.beta().iter().all(|&v| v == 0.0) {
        warn!("oracle requested for a model with zero mean difference");
        let mut e = Vector::zeros(model.dim());
        e[0] = 1.0;
        e
    } else {
        model.beta().clone()
    };
    Ok(LinearClassifier { direction, threshold })
}

/// Exact Gaussian `(type I, type II)` errors of `clf` under `model`.
pub fn population_errors(model: &LdaModel, clf: &LinearClassifier) -> Result<(f64, f64)> {
    let sd = model.sigma().norm_of(&clf.direction)?;
    if !(sd > 0.0) {
        return Err(NpError::NonPositiveSignal(sd * sd));
    }
    let w = &clf.direction;
    let type1 = std_normal_cdf((w.dot(model.mu0()) - clf.threshold) / sd);
    let type2 = std_normal_cdf((clf.threshold - w.dot(model.mu1())) / sd);
    Ok((type1, type2))
}

/// Oracle type II error `Φ(Φ⁻¹(1-α) - √Δ_d)`.
pub fn oracle_type2(model: &LdaModel, alpha: Probability) -> Result<f64> {
    let z = std_normal_quantile(1.0 - alpha.get())?;
    Ok(std_normal_cdf(z - model.mahalanobis().sqrt()))
}

pub fn beta_to_mu_d(beta: &Vector, sigma: &SpdMatrix) -> Result<Vector> {
    sigma.mul_vec(beta)
}

/// Scale `C` such that `β = C·1_p` under an AR(1, rho) covariance gives the
/// oracle type II error `target_type2` at level `alpha`.
///
/// Closed form: `√Δ* = Φ⁻¹(1-α) - Φ⁻¹(target)` and `C = √(Δ* / 1ᵀΣ1)`.
pub fn calibrate_flat_beta(p: usize, rho: f64, alpha: Probability, target_type2: f64) -> Result<f64> {
    let alpha = Probability::open(alpha.get())?;
    let ceiling = 1.0 - alpha.get();
    if (target_type2 - ceiling).abs() <= 1e-15 {
        warn!("target type II {target_type2} equals 1 - alpha; calibrated scale is zero");
        return Ok(0.0);
    }
    if !(target_type2 > 0.0 && target_type2 < ceiling) {
        return Err(NpError::InvalidLevel(target_type2));
    }
    let root_delta = std_normal_quantile(ceiling)? - std_normal_quantile(target_type2)?;
    let sigma = ar1_matrix(p, rho);
    let total = sigma.matrix().sum();
    Ok((root_delta * root_delta / total).sqrt())
}
