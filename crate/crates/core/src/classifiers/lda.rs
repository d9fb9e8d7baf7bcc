//! eLDA and feLDA thresholds.
//!
//! Both classifiers use the plug-in direction `Â = Σ̂⁻¹ μ̂_d`. eLDA corrects
//! the centre and the spread of `Âᵀx` for the bias that appears when `p/n`
//! does not vanish; feLDA uses the fixed-dimension limits of the same
//! expressions and therefore only controls type I error when `p/n → 0`.

use crate::error::{NpError, Result};
use crate::model::LinearClassifier;
use crate::numerics::std_normal_quantile;
use crate::sampling::SampleStats;

use super::NpLevels;

/// Pieces of the asymptotic variance of `√n (F̂ − F)` for eLDA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceBreakdown {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    /// `v1 + v2 + v3`
    pub v_total: f64,
    /// `(1 − r) / (2 √signal)`
    pub c_const: f64,
    /// `Φ⁻¹(1 − α)`
    pub phi_alpha: f64,
    /// `(1 − r)·signal − r‖v₁‖²`, the bias-corrected signal.
    pub s_term: f64,
}

fn check_stats(stats: &SampleStats) -> Result<()> {
    if !(stats.signal > 0.0) {
        return Err(NpError::NonPositiveSignal(stats.signal));
    }
    if !(stats.r >= 0.0 && stats.r < 1.0) {
        return Err(NpError::RatioOutOfRange(stats.r));
    }
    Ok(())
}

pub fn elda_variance(stats: &SampleStats, alpha: crate::numerics::Probability) -> Result<VarianceBreakdown> {
    check_stats(stats)?;
    let r = stats.r;
    let signal = stats.signal;
    let v1sq = stats.v1_norm_sq;
    let s_term = (1.0 - r) * signal - r * v1sq;
    if !(s_term > 0.0) {
        return Err(NpError::NonPositiveSignal(s_term));
    }
    let phi_alpha = std_normal_quantile(1.0 - alpha.get())?;
    let c_const = (1.0 - r) / (2.0 * signal.sqrt());
    let n = stats.n as f64;
    let n0 = stats.n0 as f64;
    let n1 = stats.n1 as f64;
    let omr = 1.0 - r;
    let cp = c_const * phi_alpha;
    let cp2 = cp * cp;
    let v1_norm = v1sq.sqrt();
    let cross = 2.0 * cp * v1_norm * (n1 / n0).sqrt();

    let v1 = s_term * cp2 * 2.0 * (1.0 + r) / omr.powi(7);
    let v2 = cp2 * v1sq * 4.0 * r * (1.0 + r) / omr.powi(7) + n / (n0 * omr.powi(3)) + cross * 2.0 * r / omr.powi(5);
    let v3 = v1sq / s_term
        * (cp2 * v1sq * 2.0 * r * r * (1.0 + r) / omr.powi(7)
            + (n + n1) * r / (n0 * omr.powi(3))
            + cross * 2.0 * r * r / omr.powi(5));
    Ok(VarianceBreakdown { v1, v2, v3, v_total: v1 + v2 + v3, c_const, phi_alpha, s_term })
}

/// `F̂`, the bias-corrected estimate of the oracle-like centre `√(ÂᵀΣÂ) Φ_α + Âᵀμ⁰`.
pub fn elda_center(stats: &SampleStats, phi_alpha: f64) -> f64 {
    let r = stats.r;
    let n_over_n0 = stats.n as f64 / stats.n0 as f64;
    stats.signal.sqrt() / (1.0 - r) * phi_alpha + stats.a_hat.dot(&stats.mu0_hat)
        - n_over_n0.sqrt() * r / (1.0 - r) * stats.v1_dot_e0()
}

/// Direction `Â`, threshold `F̂ + √(S·V̂/n) Φ⁻¹(1 − δ)`.
pub fn elda_train(stats: &SampleStats, levels: NpLevels) -> Result<LinearClassifier> {
    let var = elda_variance(stats, levels.alpha)?;
    let z_delta = std_normal_quantile(1.0 - levels.delta.get())?;
    let center = elda_center(stats, var.phi_alpha);
    let threshold = center + (var.s_term * var.v_total / stats.n as f64).sqrt() * z_delta;
    LinearClassifier::new(stats.a_hat.clone(), threshold)
}

/// `Ṽ = Φ_α²/2 + n/n0`.
pub fn felda_variance(stats: &SampleStats, phi_alpha: f64) -> f64 {
    phi_alpha * phi_alpha / 2.0 + stats.n as f64 / stats.n0 as f64
}

/// `F̃ = √signal Φ_α + Âᵀμ̂⁰`.
pub fn felda_center(stats: &SampleStats, phi_alpha: f64) -> f64 {
    stats.signal.sqrt() * phi_alpha + stats.a_hat.dot(&stats.mu0_hat)
}

/// Direction `Â`, threshold `F̃ + √signal √(Ṽ/n) Φ⁻¹(1 − δ)`.
pub fn felda_train(stats: &SampleStats, levels: NpLevels) -> Result<LinearClassifier> {
    if !(stats.signal > 0.0) {
        return Err(NpError::NonPositiveSignal(stats.signal));
    }
    let phi_alpha = std_normal_quantile(1.0 - levels.alpha.get())?;
    let z_delta = std_normal_quantile(1.0 - levels.delta.get())?;
    let v = felda_variance(stats, phi_alpha);
    let threshold = felda_center(stats, phi_alpha) + stats.signal.sqrt() * (v / stats.n as f64).sqrt() * z_delta;
    LinearClassifier::new(stats.a_hat.clone(), threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ar1_matrix, Matrix, SpdMatrix, Vector};
    use crate::model::LdaModel;
    use crate::numerics::{Probability, SeedSpec};
    use crate::sampling::{compute_stats, sample_gaussian, LabeledSample};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hand_stats() -> SampleStats {
        let sample = LabeledSample::new(
            Matrix::from_row_slice(2, 1, &[0.0, 2.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 3.0]),
        )
        .unwrap();
        compute_stats(&sample).unwrap()
    }

    fn simulated_stats(p: usize, n0: usize, n1: usize, seed: u64) -> SampleStats {
        let mut beta = Vector::zeros(p);
        beta.rows_mut(0, p.min(3)).fill(1.2);
        let model = LdaModel::from_beta(&beta, ar1_matrix(p, 0.5)).unwrap();
        compute_stats(&sample_gaussian(&model, n0, n1, SeedSpec::new(seed, 0)).unwrap()).unwrap()
    }

    fn alpha(a: f64) -> Probability {
        Probability::open(a).unwrap()
    }

    #[test]
    fn hand_example_is_outside_the_theory() {
        let stats = hand_stats();
        match elda_variance(&stats, alpha(0.05)) {
            Err(NpError::NonPositiveSignal(s)) => assert_abs_diff_eq!(s, -0.625, epsilon = 1e-14),
            other => panic!("expected NonPositiveSignal, got {other:?}"),
        }
        assert!(matches!(elda_train(&stats, NpLevels::new(0.05, 0.1).unwrap()), Err(NpError::NonPositiveSignal(_))));
    }

    #[test]
    fn felda_hand_example() {
        let stats = hand_stats();
        let clf = felda_train(&stats, NpLevels::new(0.05, 0.1).unwrap()).unwrap();
        let phi_a = 1.644_853_626_951_472_7;
        let z_d = 1.281_551_565_544_600_4;
        let f = 0.5f64.sqrt() * phi_a + 0.5;
        let v = phi_a * phi_a / 2.0 + 2.0;
        let want = f + 0.5f64.sqrt() * (v / 4.0).sqrt() * z_d;
        assert_abs_diff_eq!(clf.threshold, want, epsilon = 1e-12);
        assert_abs_diff_eq!(clf.threshold, 2.493, epsilon = 1e-3);
        assert_abs_diff_eq!(clf.direction[0], 0.5);
    }

    #[test]
    fn zero_ratio_limit_of_variance() {
        let stats = simulated_stats(5, 60, 80, 1).with_ratio(0.0);
        let var = elda_variance(&stats, alpha(0.05)).unwrap();
        let phi = var.phi_alpha;
        assert_abs_diff_eq!(var.v1, phi * phi / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(var.v2, 140.0 / 60.0, epsilon = 1e-12);
        assert_eq!(var.v3, 0.0);
        assert_abs_diff_eq!(var.v_total, felda_variance(&stats, phi), epsilon = 1e-12);
    }

    /// Independent transcription of the variance formulas, written in terms of
    /// `Φ_α² (1 − r)²/(4 signal)` rather than the constant `C`.
    fn scripted_variance(signal: f64, r: f64, n0: f64, n1: f64, a: f64) -> f64 {
        let phi = std_normal_quantile(1.0 - a).unwrap();
        let n = n0 + n1;
        let v1sq = n * n / (n0 * n1);
        let s = (1.0 - r) * signal - r * v1sq;
        let c2phi2 = phi * phi * (1.0 - r) * (1.0 - r) / (4.0 * signal);
        let cphi = c2phi2.sqrt();
        let ratio = (n1 / n0).sqrt();
        let d7 = (1.0 - r).powi(-7);
        let d5 = (1.0 - r).powi(-5);
        let d3 = (1.0 - r).powi(-3);
        let a1 = 2.0 * s * c2phi2 * (1.0 + r) * d7;
        let a2 = 4.0 * r * (1.0 + r) * c2phi2 * v1sq * d7 + n * d3 / n0 + 4.0 * r * cphi * v1sq.sqrt() * ratio * d5;
        let a3 = (2.0 * r * r * (1.0 + r) * c2phi2 * v1sq * d7
            + r * (n + n1) * d3 / n0
            + 4.0 * r * r * cphi * v1sq.sqrt() * ratio * d5)
            * v1sq
            / s;
        a1 + a2 + a3
    }

    #[test]
    fn variance_matches_scripted_transcription() {
        let base = simulated_stats(4, 100, 100, 2);
        let stats = SampleStats { signal: 5.0, ..base.with_ratio(0.1) };
        let var = elda_variance(&stats, alpha(0.05)).unwrap();
        let want = scripted_variance(5.0, 0.1, 100.0, 100.0, 0.05);
        assert!((var.v_total - want).abs() <= 1e-12 * want, "{} vs {want}", var.v_total);
        assert_abs_diff_eq!(var.v_total, var.v1 + var.v2 + var.v3, epsilon = 1e-15);
        assert!(var.v1 >= 0.0 && var.v2 >= 0.0 && var.v3 >= 0.0);

        let base = simulated_stats(30, 125, 500, 3);
        let var = elda_variance(&base, alpha(0.1)).unwrap();
        let want = scripted_variance(base.signal, base.r, 125.0, 500.0, 0.1);
        assert!((var.v_total - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn median_delta_gives_the_center() {
        let stats = simulated_stats(6, 80, 90, 4);
        let levels = NpLevels::new(0.1, 0.5).unwrap();
        let var = elda_variance(&stats, levels.alpha).unwrap();
        assert_eq!(elda_train(&stats, levels).unwrap().threshold, elda_center(&stats, var.phi_alpha));
        assert_eq!(felda_train(&stats, levels).unwrap().threshold, felda_center(&stats, var.phi_alpha));
    }

    #[test]
    fn center_correction_term_sign() {
        let stats = simulated_stats(10, 50, 150, 5);
        let phi = 1.0;
        let explicit = stats.signal.sqrt() / (1.0 - stats.r) * phi
            + stats.a_hat.dot(&stats.mu0_hat)
            + (stats.n as f64 / stats.n0 as f64) * stats.r / (1.0 - stats.r);
        assert_abs_diff_eq!(elda_center(&stats, phi), explicit, epsilon = 1e-12);
    }

    #[test]
    fn ratio_at_one_is_rejected() {
        let stats = simulated_stats(3, 20, 20, 6).with_ratio(1.0);
        assert!(matches!(elda_variance(&stats, alpha(0.1)), Err(NpError::RatioOutOfRange(_))));
    }

    #[test]
    fn translation_shifts_thresholds() {
        let mut beta = Vector::zeros(4);
        beta[0] = 1.5;
        let model = LdaModel::from_beta(&beta, SpdMatrix::identity(4)).unwrap();
        let sample = sample_gaussian(&model, 70, 70, SeedSpec::new(8, 0)).unwrap();
        let t = Vector::from_vec(vec![3.0, -1.0, 0.5, 10.0]);
        let moved = sample.translated(&t);
        let levels = NpLevels::new(0.05, 0.1).unwrap();
        let (s, m) = (compute_stats(&sample).unwrap(), compute_stats(&moved).unwrap());
        for train in [elda_train, felda_train] {
            let a = train(&s, levels).unwrap();
            let b = train(&m, levels).unwrap();
            assert_abs_diff_eq!(a.direction, b.direction, epsilon = 1e-10);
            assert_abs_diff_eq!(b.threshold - a.threshold, a.direction.dot(&t), epsilon = 1e-9);
            for row in sample.x0().row_iter().chain(sample.x1().row_iter()) {
                let x = row.transpose();
                let margin = a.score(&x).unwrap() - a.threshold;
                if margin.abs() > 1e-8 {
                    assert_eq!(a.predict(&x).unwrap(), b.predict(&(&x + &t)).unwrap());
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn zero_ratio_elda_equals_felda(seed in any::<u64>(), p in 1usize..8, a in 0.01f64..0.3, d in 0.01f64..0.5) {
            let stats = simulated_stats(p, 40, 60, seed).with_ratio(0.0);
            let levels = NpLevels::new(a, d).unwrap();
            let e = elda_train(&stats, levels).unwrap();
            let f = felda_train(&stats, levels).unwrap();
            prop_assert!((e.threshold - f.threshold).abs() <= 1e-12 * f.threshold.abs().max(1.0));
        }

        #[test]
        fn thresholds_decrease_in_delta(seed in any::<u64>(), d1 in 0.01f64..0.9, d2 in 0.01f64..0.9) {
            prop_assume!((d1 - d2).abs() > 1e-6);
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let stats = simulated_stats(5, 80, 80, seed);
            for train in [elda_train, felda_train] {
                let strict = train(&stats, NpLevels::new(0.1, lo).unwrap()).unwrap().threshold;
                let loose = train(&stats, NpLevels::new(0.1, hi).unwrap()).unwrap().threshold;
                prop_assert!(strict > loose);
            }
        }
    }
}
