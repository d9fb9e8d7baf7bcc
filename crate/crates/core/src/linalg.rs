//! Dense vectors and symmetric positive definite matrices.
//!
//! Storage and factorization are delegated to `nalgebra`; this module pins
//! down the contract the classifiers rely on (symmetrization, Cholesky-backed
//! solves, dimension checks).

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{NpError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

const ASYMMETRY_WARN: f64 = 1e-8;

/// Symmetric positive definite matrix with its Cholesky factorization.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    matrix: Matrix,
    chol: Cholesky<f64, Dyn>,
    lower: Matrix,
}

impl SpdMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2` and factorizes it.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(NpError::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let sym = (&m + m.transpose()) * 0.5;
        let scale = sym.norm();
        if scale > 0.0 {
            let asym = (&m - m.transpose()).norm() / scale;
            if asym > ASYMMETRY_WARN {
                warn!("symmetrizing matrix with relative asymmetry {asym:.3e}");
            }
        }
        let chol = Cholesky::new(sym.clone()).ok_or(NpError::NotPositiveDefinite)?;
        let lower = chol.l();
        Ok(Self { matrix: sym, chol, lower })
    }

    pub fn identity(p: usize) -> Self {
        Self::new(Matrix::identity(p, p)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Lower triangular `L` with `L Lᵀ = self`.
    pub fn cholesky_factor(&self) -> &Matrix {
        &self.lower
    }

    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        check_dim(self.dim(), b.len())?;
        Ok(self.chol.solve(b))
    }

    /// Explicit inverse. Prefer [`SpdMatrix::solve`] when only products are needed.
    pub fn inverse(&self) -> Matrix {
        self.chol.inverse()
    }

    pub fn mul_vec(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.dim(), v.len())?;
        Ok(&self.matrix * v)
    }

    /// `‖Lᵀ v‖`, i.e. `sqrt(vᵀ M v)` computed through the factor.
    pub fn norm_of(&self, v: &Vector) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        Ok(self.lower.tr_mul(v).norm())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(NpError::DimensionMismatch { expected, found })
    }
}

/// Lower Cholesky factor of a symmetric matrix.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    SpdMatrix::new(m.clone()).map(|s| s.lower)
}

pub fn spd_solve(m: &SpdMatrix, b: &Vector) -> Result<Vector> {
    m.solve(b)
}

/// `aᵀ m b`.
pub fn quadratic_form(a: &Vector, m: &SpdMatrix, b: &Vector) -> Result<f64> {
    check_dim(m.dim(), a.len())?;
    check_dim(m.dim(), b.len())?;
    Ok(a.dot(&(m.matrix() * b)))
}

/// AR(1) correlation matrix, entry `(i, j) = rho^|i-j|`.
pub fn ar1_matrix(p: usize, rho: f64) -> SpdMatrix {
    assert!(p >= 1, "AR(1) matrix needs p >= 1");
    assert!(rho > -1.0 && rho < 1.0, "AR(1) coefficient {rho} outside (-1, 1)");
    let m = Matrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32));
    SpdMatrix::new(m).expect("AR(1) with |rho| < 1 is positive definite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cholesky_examples() {
        let eye = Matrix::identity(4, 4);
        assert_relative_eq!(cholesky(&eye).unwrap(), eye);

        let m = Matrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky(&m).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2f64.sqrt()]);
        assert_relative_eq!(l, want, epsilon = 1e-14);
        assert!((&l * l.transpose() - &m).norm() <= 1e-10 * m.norm());

        assert!(matches!(cholesky(&Matrix::zeros(3, 3)), Err(NpError::NotPositiveDefinite)));
    }

    #[test]
    fn solve_examples() {
        let b = Vector::from_vec(vec![1.0, -2.0, 3.5]);
        assert_relative_eq!(spd_solve(&SpdMatrix::identity(3), &b).unwrap(), b);

        let two = SpdMatrix::new(Matrix::from_element(1, 1, 2.0)).unwrap();
        assert_relative_eq!(spd_solve(&two, &Vector::from_element(1, 1.0)).unwrap()[0], 0.5);

        let sigma = ar1_matrix(3, 0.5);
        let x = Vector::from_element(3, 1.2);
        let rhs = sigma.mul_vec(&x).unwrap();
        assert_relative_eq!(spd_solve(&sigma, &rhs).unwrap(), x, epsilon = 1e-12);

        assert!(matches!(
            spd_solve(&sigma, &Vector::zeros(2)),
            Err(NpError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn quadratic_form_examples() {
        let u = Vector::from_vec(vec![1.0, 2.0, -2.0]);
        assert_relative_eq!(quadratic_form(&u, &SpdMatrix::identity(3), &u).unwrap(), 9.0);

        let ones = Vector::from_element(3, 1.0);
        // 3 diagonal ones + 4 entries of 0.5 + 2 entries of 0.25
        assert_relative_eq!(quadratic_form(&ones, &ar1_matrix(3, 0.5), &ones).unwrap(), 5.5, epsilon = 1e-14);
        assert_eq!(quadratic_form(&u, &ar1_matrix(3, 0.5), &Vector::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn ar1_entries() {
        assert_relative_eq!(ar1_matrix(5, 0.0).matrix().clone(), Matrix::identity(5, 5));
        let two = ar1_matrix(2, 0.5);
        assert_relative_eq!(two.matrix().clone(), Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        assert_relative_eq!(ar1_matrix(3, 0.5).matrix()[(0, 2)], 0.25);
    }

    #[test]
    fn norm_of_matches_quadratic_form() {
        let sigma = ar1_matrix(6, -0.3);
        let v = Vector::from_fn(6, |i, _| i as f64 - 2.5);
        let q = quadratic_form(&v, &sigma, &v).unwrap();
        assert_relative_eq!(sigma.norm_of(&v).unwrap().powi(2), q, max_relative = 1e-12);
    }

    #[test]
    fn symmetrizes_slightly_asymmetric_input() {
        let mut m = Matrix::identity(3, 3) * 2.0;
        m[(0, 1)] = 0.1;
        m[(1, 0)] = 0.3;
        let s = SpdMatrix::new(m).unwrap();
        assert_relative_eq!(s.matrix()[(0, 1)], 0.2);
        assert_relative_eq!(s.matrix()[(1, 0)], 0.2);
    }

    /// Random SPD matrix `Q diag(λ) Qᵀ` with eigenvalues log-spaced in [1, cond].
    fn random_spd(rng: &mut ChaCha8Rng, p: usize, cond: f64) -> Matrix {
        let g = Matrix::from_fn(p, p, |_, _| rng.random::<f64>() - 0.5);
        let q = g.qr().q();
        let lambdas = Vector::from_fn(p, |i, _| {
            if p == 1 {
                1.0
            } else {
                cond.powf(i as f64 / (p - 1) as f64)
            }
        });
        &q * Matrix::from_diagonal(&lambdas) * q.transpose()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn solve_then_multiply_reconstructs(seed in any::<u64>(), p in 1usize..=64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = SpdMatrix::new(random_spd(&mut rng, p, 1e6)).unwrap();
            let b = Vector::from_fn(p, |_, _| rng.random::<f64>() - 0.5);
            let x = m.solve(&b).unwrap();
            let resid = (m.matrix() * &x - &b).norm();
            prop_assert!(resid <= 1e-8 * b.norm(), "residual {resid}");
        }

        #[test]
        fn quadratic_form_is_symmetric(seed in any::<u64>(), p in 1usize..=32) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = SpdMatrix::new(random_spd(&mut rng, p, 1e3)).unwrap();
            let a = Vector::from_fn(p, |_, _| rng.random::<f64>() - 0.5);
            let b = Vector::from_fn(p, |_, _| rng.random::<f64>() - 0.5);
            let ab = quadratic_form(&a, &m, &b).unwrap();
            let ba = quadratic_form(&b, &m, &a).unwrap();
            let scale = a.norm() * b.norm() * m.matrix().norm();
            prop_assert!((ab - ba).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
