//! Monte-Carlo checks of the quadratic-form expansions behind eLDA and of the
//! normal approximation of its centre estimate.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::classifiers::{elda_center, elda_variance, NpLevels};
use crate::error::{NpError, Result};
use crate::linalg::{quadratic_form, SpdMatrix, Vector};
use crate::model::LdaModel;
use crate::numerics::{format_real, ks_statistic, std_normal_cdf, std_normal_quantile, SeedSpec};
use crate::sampling::{compute_stats, sample_gaussian, SampleStats};

/// The four quadratic forms whose leading terms drive the eLDA threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConcentrationQuantity {
    /// `ÂᵀΣ̂Â ≈ (r‖v₁‖² + Δ)/(1 − r)`
    SampleQuadratic,
    /// `ÂᵀΣÂ ≈ (r‖v₁‖² + Δ)/(1 − r)³`
    PopulationQuadratic,
    /// `Âᵀμ_d ≈ Δ/(1 − r)`
    MeanDifference,
    /// `Âᵀ(μ̂⁰ − μ⁰) ≈ −(n/n0) r/(1 − r)`
    CentreShift,
}

impl ConcentrationQuantity {
    pub const ALL: [ConcentrationQuantity; 4] = [
        ConcentrationQuantity::SampleQuadratic,
        ConcentrationQuantity::PopulationQuadratic,
        ConcentrationQuantity::MeanDifference,
        ConcentrationQuantity::CentreShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConcentrationQuantity::SampleQuadratic => "a_sigmahat_a",
            ConcentrationQuantity::PopulationQuadratic => "a_sigma_a",
            ConcentrationQuantity::MeanDifference => "a_mu_d",
            ConcentrationQuantity::CentreShift => "a_mu0_shift",
        }
    }

    /// Leading-order value for a design with these sizes and separation.
    pub fn target(self, r: f64, v1_norm_sq: f64, mahalanobis: f64, n: usize, n0: usize) -> f64 {
        let q = 1.0 - r;
        match self {
            ConcentrationQuantity::SampleQuadratic => (r * v1_norm_sq + mahalanobis) / q,
            ConcentrationQuantity::PopulationQuadratic => (r * v1_norm_sq + mahalanobis) / q.powi(3),
            ConcentrationQuantity::MeanDifference => mahalanobis / q,
            ConcentrationQuantity::CentreShift => -(n as f64 / n0 as f64) * r / q,
        }
    }

    fn observe(self, stats: &SampleStats, model: &LdaModel) -> Result<f64> {
        let a = &stats.a_hat;
        match self {
            ConcentrationQuantity::SampleQuadratic => Ok(stats.signal),
            ConcentrationQuantity::PopulationQuadratic => quadratic_form(a, model.sigma(), a),
            ConcentrationQuantity::MeanDifference => Ok(a.dot(&model.mu_d())),
            ConcentrationQuantity::CentreShift => Ok(a.dot(&(&stats.mu0_hat - model.mu0()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub quantity: ConcentrationQuantity,
    pub target: f64,
    /// Median over repetitions of `|observed − target| / |target|`.
    pub median_rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub n: usize,
    pub p: usize,
    pub r: f64,
    pub reps: usize,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationReport {
    pub fn deviation(&self, quantity: ConcentrationQuantity) -> f64 {
        self.rows.iter().find(|row| row.quantity == quantity).map_or(f64::NAN, |row| row.median_rel_dev)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

fn observe_all(stats: &SampleStats, model: &LdaModel) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, q) in out.iter_mut().zip(ConcentrationQuantity::ALL) {
        *slot = q.observe(stats, model)?;
    }
    Ok(out)
}

fn check_size(p: usize, n: usize) -> Result<()> {
    if n < p + 3 {
        return Err(NpError::InsufficientSamples { needed: p + 3, got: n });
    }
    Ok(())
}

fn summarize(model: &LdaModel, n0: usize, n1: usize, observed: &[[f64; 4]]) -> ConcentrationReport {
    let p = model.dim();
    let n = n0 + n1;
    let r = p as f64 / n as f64;
    let v1sq = (n * n) as f64 / (n0 * n1) as f64;
    let delta_d = model.mahalanobis();
    let rows = ConcentrationQuantity::ALL
        .iter()
        .enumerate()
        .map(|(j, &quantity)| {
            let target = quantity.target(r, v1sq, delta_d, n, n0);
            let mut devs: Vec<f64> = observed.iter().map(|o| (o[j] - target).abs() / target.abs()).collect();
            ConcentrationRow { quantity, target, median_rel_dev: median(&mut devs) }
        })
        .collect();
    ConcentrationReport { n, p, r, reps: observed.len(), rows }
}

/// Per repetition `i` the training sample is drawn from `seed.derive(i)`.
/// Repetitions run on the ambient rayon pool; results do not depend on its size.
pub fn verify_concentration(model: &LdaModel, n0: usize, n1: usize, reps: usize, seed: SeedSpec) -> Result<ConcentrationReport> {
    check_size(model.dim(), n0 + n1)?;
    let observed: Vec<[f64; 4]> = (0..reps)
        .into_par_iter()
        .map(|i| observe_all(&compute_stats(&sample_gaussian(model, n0, n1, seed.derive(i as u64))?)?, model))
        .collect::<Result<_>>()?;
    Ok(summarize(model, n0, n1, &observed))
}

/// Identity covariance, `μ⁰ = 0`, `μ¹ = √Δ e₁`: the canonical design for the
/// concentration checks, since every quantity is rotation invariant.
pub fn canonical_model(p: usize, mahalanobis: f64) -> Result<LdaModel> {
    let mut mu1 = Vector::zeros(p);
    mu1[0] = mahalanobis.sqrt();
    LdaModel::new(Vector::zeros(p), mu1, SpdMatrix::identity(p))
}

/// [`verify_concentration`] at fixed `r` for each total size in `ns` (balanced
/// classes, `p = round(r n)`), with a distinct derived seed per size.
pub fn concentration_sweep(r: f64, mahalanobis: f64, ns: &[usize], reps: usize, seed: SeedSpec) -> Result<Vec<ConcentrationReport>> {
    ns.iter()
        .enumerate()
        .map(|(k, &n)| {
            let p = ((r * n as f64).round() as usize).max(1);
            let model = canonical_model(p, mahalanobis)?;
            verify_concentration(&model, n / 2, n - n / 2, reps, seed.derive(k as u64))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub p: usize,
    pub r: f64,
    /// Repetitions with a positive corrected signal, i.e. those that produced a `Z`.
    pub reps_used: usize,
    pub ks_stat: f64,
    pub var_z: f64,
    /// `Z` values in repetition order.
    pub z: Vec<f64>,
}

/// Standardized centre error `√n (F̂ − F) / √(S V̂)`, where `F` uses the true
/// `(Σ, μ⁰)`, compared with N(0, 1).
pub fn verify_theta_clt(
    model: &LdaModel,
    levels: NpLevels,
    n0: usize,
    n1: usize,
    reps: usize,
    seed: SeedSpec,
) -> Result<CltReport> {
    let p = model.dim();
    let n = n0 + n1;
    let phi_alpha = std_normal_quantile(1.0 - levels.alpha.get())?;
    let draws: Vec<std::result::Result<f64, f64>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let sample = sample_gaussian(model, n0, n1, seed.derive(i as u64))?;
            let stats = compute_stats(&sample)?;
            let var = match elda_variance(&stats, levels.alpha) {
                Ok(v) => v,
                Err(NpError::NonPositiveSignal(s)) => return Ok(Err(s)),
                Err(e) => return Err(e),
            };
            let f_hat = elda_center(&stats, var.phi_alpha);
            let f_true = model.sigma().norm_of(&stats.a_hat)? * phi_alpha + stats.a_hat.dot(model.mu0());
            Ok(Ok((n as f64).sqrt() * (f_hat - f_true) / (var.s_term * var.v_total).sqrt()))
        })
        .collect::<Result<_>>()?;
    let z: Vec<f64> = draws.iter().filter_map(|d| d.as_ref().ok().copied()).collect();
    let failures = reps - z.len();
    if failures * 100 > reps {
        let worst = draws.iter().filter_map(|d| d.err()).fold(f64::INFINITY, f64::min);
        log::error!("{failures} of {reps} repetitions had a non-positive corrected signal");
        return Err(NpError::NonPositiveSignal(worst));
    }
    let k = z.len() as f64;
    let mean = z.iter().sum::<f64>() / k;
    let var_z = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let ks_stat = ks_statistic(&z, std_normal_cdf);
    Ok(CltReport { n, p, r: p as f64 / n as f64, reps_used: z.len(), ks_stat, var_z, z })
}

/// One line of a verification report; missing fields are written as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub quantity: String,
    pub n: usize,
    pub p: usize,
    pub r: f64,
    pub median_rel_dev: Option<f64>,
    pub ks_stat: Option<f64>,
    pub var_z: Option<f64>,
}

impl From<&ConcentrationReport> for Vec<ReportRow> {
    fn from(report: &ConcentrationReport) -> Self {
        report
            .rows
            .iter()
            .map(|row| ReportRow {
                quantity: row.quantity.name().to_string(),
                n: report.n,
                p: report.p,
                r: report.r,
                median_rel_dev: Some(row.median_rel_dev),
                ks_stat: None,
                var_z: None,
            })
            .collect()
    }
}

impl From<&CltReport> for ReportRow {
    fn from(report: &CltReport) -> Self {
        ReportRow {
            quantity: "theta_z".to_string(),
            n: report.n,
            p: report.p,
            r: report.r,
            median_rel_dev: None,
            ks_stat: Some(report.ks_stat),
            var_z: Some(report.var_z),
        }
    }
}

pub const REPORT_HEADER: [&str; 7] = ["quantity", "n", "p", "r", "median_rel_dev", "ks_stat", "var_z"];

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), format_real);
    for row in rows {
        w.write_record([
            row.quantity.clone(),
            row.n.to_string(),
            row.p.to_string(),
            format_real(row.r),
            opt(row.median_rel_dev),
            opt(row.ks_stat),
            opt(row.var_z),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| NpError::io(path, e))?;
    write_report(file, rows).map_err(|e| NpError::csv(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_at_zero_ratio() {
        assert_eq!(ConcentrationQuantity::SampleQuadratic.target(0.0, 4.0, 3.0, 100, 50), 3.0);
        assert_eq!(ConcentrationQuantity::PopulationQuadratic.target(0.0, 4.0, 3.0, 100, 50), 3.0);
        assert_eq!(ConcentrationQuantity::MeanDifference.target(0.0, 4.0, 3.0, 100, 50), 3.0);
        assert_eq!(ConcentrationQuantity::CentreShift.target(0.5, 4.0, 3.0, 100, 50), -2.0);
    }

    #[test]
    fn signal_concentrates() {
        let model = canonical_model(50, 4.0).unwrap();
        let report = verify_concentration(&model, 250, 250, 200, SeedSpec::new(1, 0)).unwrap();
        let bound = 5.0 / (500f64).sqrt();
        assert!(report.deviation(ConcentrationQuantity::SampleQuadratic) < bound, "{report:?}");
        assert!(report.deviation(ConcentrationQuantity::PopulationQuadratic) < bound, "{report:?}");
        assert!(report.deviation(ConcentrationQuantity::MeanDifference) < bound, "{report:?}");
    }

    #[test]
    fn one_dimensional_design() {
        let model = canonical_model(1, 4.0).unwrap();
        let report = verify_concentration(&model, 5000, 5000, 50, SeedSpec::new(2, 0)).unwrap();
        for q in [ConcentrationQuantity::SampleQuadratic, ConcentrationQuantity::PopulationQuadratic, ConcentrationQuantity::MeanDifference] {
            assert!(report.deviation(q) < 0.05, "{report:?}");
        }
    }

    #[test]
    fn too_many_features() {
        let model = canonical_model(20, 1.0).unwrap();
        assert!(matches!(
            verify_concentration(&model, 10, 10, 5, SeedSpec::new(1, 0)),
            Err(NpError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn report_layout() {
        let rows = vec![
            ReportRow {
                quantity: "a_sigma_a".into(),
                n: 500,
                p: 50,
                r: 0.1,
                median_rel_dev: Some(0.0123456789),
                ks_stat: None,
                var_z: None,
            },
            ReportRow { quantity: "theta_z".into(), n: 400, p: 40, r: 0.1, median_rel_dev: None, ks_stat: Some(0.02), var_z: Some(1.01) },
        ];
        let mut buf = Vec::new();
        write_report(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "quantity,n,p,r,median_rel_dev,ks_stat,var_z\na_sigma_a,500,50,0.1,0.0123457,NA,NA\ntheta_z,400,40,0.1,NA,0.02,1.01\n"
        );
    }
}
