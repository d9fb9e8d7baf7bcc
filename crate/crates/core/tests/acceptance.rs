//! Acceptance suite: every criterion at its stated size and tolerance.
//!
//! Prints one `PASS`/`FAIL` line per criterion and exits nonzero if any fail.

use std::time::Instant;

use nplda::classifiers::{elda_train, felda_train, umbrella_min_size, umbrella_order, NpLevels, UmbrellaOrder};
use nplda::experiments::{
    builtin_config, run_experiment, write_aggregates, write_records, ExperimentConfig, ExperimentOutput, Method,
};
use nplda::linalg::{ar1_matrix, Vector};
use nplda::model::{calibrate_flat_beta, oracle_type2, LdaModel};
use nplda::numerics::{binom_upper_tail, rng_stream, Probability, SeedSpec};
use nplda::rmt::{
    canonical_model, concentration_sweep, mp_m1, mp_values_at_zero, mp_values_at_zero_numeric, mp_zm2, upper_half_plane_grid,
    verify_theta_clt, ConcentrationQuantity, MpParams,
};
use nplda::sampling::{compute_stats, sample_gaussian};
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn violation(out: &ExperimentOutput, method: Method, axis_value: usize) -> f64 {
    out.aggregates
        .iter()
        .find(|a| a.method == method && a.axis_value == axis_value)
        .and_then(|a| a.violation_rate)
        .unwrap_or(f64::NAN)
}

fn toy_table() -> Outcome {
    let cfg = builtin_config("toy").unwrap();
    let start = Instant::now();
    let out = run_experiment(&cfg, 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let row = out.aggregates.iter().find(|a| a.method == Method::Elda).unwrap();
    let (t1, t2) = (row.mean_type1.unwrap(), row.mean_type2.unwrap());
    let pass = (0.025..=0.040).contains(&t1) && (0.42..=0.48).contains(&t2) && secs <= 120.0;
    outcome(pass, format!("elda mean type I {t1:.4} (ref 0.0314), type II {t2:.4} (ref 0.4478), {secs:.1}s single-threaded"))
}

fn violation_table() -> Outcome {
    let cfg = ExperimentConfig { methods: vec![Method::Elda, Method::Felda], ..builtin_config("1a").unwrap() };
    let out = run_experiment(&cfg, workers()).unwrap();
    let e120 = violation(&out, Method::Elda, 120);
    let e500 = violation(&out, Method::Elda, 500);
    let f1000 = violation(&out, Method::Felda, 1000);
    let large: Vec<(usize, f64)> = cfg
        .n0_grid
        .iter()
        .filter(|&&n0| n0 >= 120)
        .map(|&n0| (n0, violation(&out, Method::Elda, n0)))
        .collect();
    let worst = large.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let pass = (e120 - 0.108).abs() <= 0.03
        && (e500 - 0.101).abs() <= 0.03
        && worst <= 0.1 + 0.05
        && (f1000 - 0.100).abs() <= 0.03;
    outcome(
        pass,
        format!("elda @120 {e120:.3} (ref .108), @500 {e500:.3} (ref .101), max n0>=120 {worst:.3}; felda @1000 {f1000:.3} (ref .100)"),
    )
}

fn felda_failure_mode() -> Outcome {
    let cfg = ExperimentConfig {
        p_grid: Some(vec![30]),
        methods: vec![Method::Elda, Method::Felda],
        ..builtin_config("1c").unwrap()
    };
    let start = Instant::now();
    let out = run_experiment(&cfg, workers()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    // A one-point grid is indexed along n0.
    let f = violation(&out, Method::Felda, 125);
    let e = violation(&out, Method::Elda, 125);
    outcome(
        f > 0.6 && e <= 0.15 && secs <= 600.0,
        format!("p=30: felda {f:.3} (ref .817), elda {e:.3} (ref .082), {secs:.1}s"),
    )
}

fn umbrella_combinatorics() -> Outcome {
    let nu61 = binom_upper_tail(63, 61, 0.9);
    let nu60 = binom_upper_tail(63, 60, 0.9);
    let k_a = umbrella_order(63, NpLevels::new(0.1, 0.1).unwrap());
    let k_b = umbrella_order(63, NpLevels::new(0.1, 0.05).unwrap());
    let reserve = umbrella_min_size(Probability::open(0.05).unwrap(), Probability::open(0.1).unwrap()).unwrap();
    let pass = (nu61 - 0.042).abs() <= 5e-4
        && (nu60 - 0.113).abs() <= 5e-4
        && k_a == UmbrellaOrder::Order(61)
        && k_b == UmbrellaOrder::Order(61)
        && reserve == 45;
    outcome(pass, format!("nu(61) {nu61:.4}, nu(60) {nu60:.4}, k* {k_a:?}/{k_b:?}, reserve {reserve}"))
}

fn oracle_calibration() -> Outcome {
    let alpha = Probability::open(0.1).unwrap();
    let mut worst: f64 = 0.0;
    for p in 3..=30 {
        let scale = calibrate_flat_beta(p, 0.5, alpha, 0.236).unwrap();
        let model = LdaModel::from_beta(&Vector::from_element(p, scale), ar1_matrix(p, 0.5)).unwrap();
        worst = worst.max((oracle_type2(&model, alpha).unwrap() - 0.236).abs());
    }
    outcome(worst <= 1e-6, format!("max |type II - 0.236| over p = 3..30: {worst:.2e}"))
}

fn mp_identities() -> Outcome {
    let mut max_res: f64 = 0.0;
    let mut max_dev: f64 = 0.0;
    for r in [0.05, 0.25, 0.5, 0.9] {
        let params = MpParams::new(r).unwrap();
        let s = r.sqrt();
        for z in upper_half_plane_grid(&params, 100) {
            let m = mp_m1(z, r).unwrap();
            let w = mp_zm2(z, r).unwrap();
            max_res = max_res.max((z * s * m * m + (z - 1.0 / s + s) * m + 1.0).norm());
            max_res = max_res.max((w * w / s + (z - s + 1.0 / s) * w + z).norm());
        }
        let exact = mp_values_at_zero(r).unwrap();
        let numeric = mp_values_at_zero_numeric(r).unwrap();
        let pairs = exact.m1_derivatives().into_iter().chain(exact.zm2_derivatives()).zip(
            numeric.m1_derivatives().into_iter().chain(numeric.zm2_derivatives()),
        );
        for (a, b) in pairs {
            max_dev = max_dev.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    outcome(
        max_res < 1e-12 && max_dev < 1e-8,
        format!("max residual {max_res:.2e}, max derivative deviation {max_dev:.2e}"),
    )
}

fn concentration_rate() -> Outcome {
    let start = Instant::now();
    let reports = concentration_sweep(0.1, 4.0, &[500, 1000, 2000], 200, SeedSpec::new(7, 0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut pass = secs <= 300.0;
    let mut parts = Vec::new();
    for q in ConcentrationQuantity::ALL {
        let devs: Vec<f64> = reports.iter().map(|r| r.deviation(q)).collect();
        let ratios = [devs[0] / devs[1], devs[1] / devs[2]];
        pass &= ratios.iter().all(|x| (1.2..=1.8).contains(x));
        parts.push(format!("{} {:.2}/{:.2}", q.name(), ratios[0], ratios[1]));
    }
    outcome(pass, format!("ratios {}; {secs:.1}s", parts.join(", ")))
}

fn theta_clt() -> Outcome {
    let model = canonical_model(40, 4.0).unwrap();
    let levels = NpLevels::new(0.05, 0.1).unwrap();
    let report = verify_theta_clt(&model, levels, 200, 200, 2000, SeedSpec::new(8, 0)).unwrap();
    outcome(
        report.ks_stat < 0.05 && (0.85..=1.15).contains(&report.var_z),
        format!("KS {:.4}, var {:.3}, {} reps used", report.ks_stat, report.var_z, report.reps_used),
    )
}

fn zero_ratio_consistency() -> Outcome {
    let mut rng = rng_stream(SeedSpec::new(9, 0));
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let p = rng.random_range(1..=20);
        let n0 = rng.random_range(p + 5..=p + 200);
        let n1 = rng.random_range(p + 5..=p + 200);
        let beta = Vector::from_fn(p, |_, _| rng.random_range(-1.0..1.5));
        let rho = rng.random_range(-0.6..0.8);
        let model = LdaModel::from_beta(&beta, ar1_matrix(p, rho)).unwrap();
        let stats = compute_stats(&sample_gaussian(&model, n0, n1, SeedSpec::new(10, i)).unwrap()).unwrap();
        let levels = NpLevels::new(rng.random_range(0.01..0.3), rng.random_range(0.01..0.5)).unwrap();
        let (Ok(e), Ok(f)) = (elda_train(&stats.with_ratio(0.0), levels), felda_train(&stats, levels)) else {
            return outcome(false, format!("instance {i} failed to train"));
        };
        worst = worst.max((e.threshold - f.threshold).abs() / f.threshold.abs().max(1.0));
    }
    outcome(worst <= 1e-12, format!("max threshold gap over 100 instances {worst:.2e}"))
}

fn csv_bytes(out: &ExperimentOutput) -> (Vec<u8>, Vec<u8>) {
    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    write_records(&mut records, &out.records).unwrap();
    write_aggregates(&mut aggregates, &out.aggregates).unwrap();
    (records, aggregates)
}

fn determinism() -> Outcome {
    let mut all_equal = true;
    let mut sizes = Vec::new();
    for id in ["1a", "1d", "3"] {
        let cfg = ExperimentConfig { reps: 20, test_per_class: 2_000, ..builtin_config(id).unwrap() };
        let first = csv_bytes(&run_experiment(&cfg, 1).unwrap());
        let second = csv_bytes(&run_experiment(&cfg, 1).unwrap());
        let parallel = csv_bytes(&run_experiment(&cfg, 8).unwrap());
        all_equal &= first == second && first == parallel;
        sizes.push(format!("{id}: {} record bytes", first.0.len()));
    }
    outcome(all_equal, format!("1 vs 1 vs 8 workers byte-identical ({})", sizes.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 toy example reproduction", toy_table),
        ("2 violation-rate spot checks", violation_table),
        ("3 felda failure mode", felda_failure_mode),
        ("4 umbrella combinatorics", umbrella_combinatorics),
        ("5 oracle calibration", oracle_calibration),
        ("6 Marchenko-Pastur identities", mp_identities),
        ("7 concentration rate", concentration_rate),
        ("8 centre-estimate CLT", theta_clt),
        ("9 zero-ratio consistency", zero_ratio_consistency),
        ("10 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("{status} criterion {name}: {} [{:.1}s]", result.detail, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
