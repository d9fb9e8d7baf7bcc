//! `nplda`: run simulation grids, umbrella and oracle calculations, random
//! matrix checks and screening evaluations from the command line.
//!
//! Results go to stdout as one JSON object. Failures print a single JSON line
//! `{"error": CODE, "message": TEXT}` on stderr and exit with status 2.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::{json, Value};

use nplda::classifiers::{umbrella_min_size, umbrella_order, UmbrellaOrder};
use nplda::experiments::{builtin_config, run_experiment, write_aggregates_csv, write_records_csv, ExperimentConfig};
use nplda::linalg::{ar1_matrix, Vector};
use nplda::model::{calibrate_flat_beta, oracle_classifier, population_errors, LdaModel};
use nplda::numerics::{binom_upper_tail, format_real};
use nplda::rmt::{
    canonical_model, concentration_sweep, mp_m1, mp_values_at_zero, mp_values_at_zero_numeric, mp_zm2, upper_half_plane_grid,
    verify_theta_clt, write_report_csv, MpParams, ReportRow,
};
use nplda::screening::{run_screen_eval, ScreenPlan, TabularDataset};
use nplda::{NpError, NpLevels, Probability, SeedSpec};

#[derive(Parser)]
#[command(name = "nplda", version, about = "Neyman-Pearson LDA classifiers and their simulation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation grid and write records.csv and aggregates.csv.
    Simulate(SimulateArgs),
    /// Type II error of the population NP oracle for a flat-β AR(1) model.
    Oracle(OracleArgs),
    /// Umbrella order statistic and minimal class-0 reserve.
    UmbrellaK(UmbrellaArgs),
    /// Marchenko-Pastur transform residuals and derivatives at zero.
    RmtCheck(RmtArgs),
    /// Concentration of the quadratic forms behind the eLDA threshold.
    ConcentrationCheck(ConcentrationArgs),
    /// Normal approximation of the standardized eLDA centre estimate.
    CltCheck(CltArgs),
    /// Screen features by t-test and evaluate eLDA on repeated splits of a CSV.
    Screen(ScreenArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML experiment config.
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    config: Option<PathBuf>,
    /// Built-in example id, e.g. toy, 1a, 2b, 3.
    #[arg(long)]
    example: Option<String>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the test-set size per class.
    #[arg(long)]
    test_per_class: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Common value of the nonzero β entries.
    #[arg(long, conflicts_with = "target_type2", required_unless_present = "target_type2")]
    beta_scale: Option<f64>,
    /// Solve for the β scale that gives this oracle type II error.
    #[arg(long)]
    target_type2: Option<f64>,
    /// Number of nonzero β entries (default: all p).
    #[arg(long)]
    p0: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(Args)]
struct UmbrellaArgs {
    /// Size of the held-out class-0 set.
    #[arg(long)]
    m: u64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Args)]
struct RmtArgs {
    /// Dimension-to-sample ratio in (0, 1).
    #[arg(long)]
    r: f64,
    /// Number of upper half-plane points for the residual check.
    #[arg(long, default_value_t = 100)]
    grid: usize,
}

#[derive(Args)]
struct ConcentrationArgs {
    #[arg(long, default_value_t = 0.1)]
    r: f64,
    /// Mahalanobis distance between the class means.
    #[arg(long, default_value_t = 4.0)]
    mahalanobis: f64,
    /// Total sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 2000])]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CltArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n0: usize,
    #[arg(long)]
    n1: usize,
    #[arg(long, default_value_t = 4.0)]
    mahalanobis: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScreenArgs {
    /// CSV with a header row; every column except the label is a feature.
    #[arg(long)]
    data: PathBuf,
    /// Name of the 0/1 label column.
    #[arg(long, default_value = "label")]
    label_col: String,
    #[arg(long, default_value_t = 40)]
    top_k: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0.7)]
    train_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional per-repetition CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn opt_real(x: Option<f64>) -> Value {
    x.map_or(Value::Null, Value::from)
}

fn simulate(args: SimulateArgs) -> Result<Value, NpError> {
    let mut cfg = match (&args.config, &args.example) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(id)) => builtin_config(id)?,
        (None, None) => return Err(NpError::InvalidConfig("one of --config or --example is required".into())),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(test) = args.test_per_class {
        cfg.test_per_class = test;
    }
    cfg.validate()?;
    if args.workers == 0 {
        return Err(NpError::InvalidConfig("workers must be at least 1".into()));
    }
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    info!("running {} with {} workers", cfg.name, args.workers);
    let output = run_experiment(&cfg, args.workers)?;
    let records = args.out.join("records.csv");
    let aggregates = args.out.join("aggregates.csv");
    write_records_csv(&records, &output.records)?;
    write_aggregates_csv(&aggregates, &output.aggregates)?;
    let rows: Vec<Value> = output
        .aggregates
        .iter()
        .map(|a| {
            json!({
                "method": a.method.name(),
                "axis_value": a.axis_value,
                "mean_type1": opt_real(a.mean_type1),
                "mean_type2": opt_real(a.mean_type2),
                "violation_rate": opt_real(a.violation_rate),
                "feasible_fraction": a.feasible_fraction,
            })
        })
        .collect();
    Ok(json!({
        "name": cfg.name,
        "records": records.display().to_string(),
        "aggregates": aggregates.display().to_string(),
        "summary": rows,
    }))
}

fn io_error(path: &Path, source: std::io::Error) -> NpError {
    NpError::Io { path: path.to_path_buf(), source }
}

fn oracle(args: OracleArgs) -> Result<Value, NpError> {
    let alpha = Probability::open(args.alpha)?;
    let p0 = args.p0.unwrap_or(args.p);
    if p0 == 0 || p0 > args.p {
        return Err(NpError::InvalidConfig(format!("p0 must be in 1..={}, got {p0}", args.p)));
    }
    let scale = match (args.beta_scale, args.target_type2) {
        (Some(s), _) => s,
        (None, Some(target)) if p0 == args.p => calibrate_flat_beta(args.p, args.rho, alpha, target)?,
        (None, Some(_)) => return Err(NpError::InvalidConfig("--target-type2 calibrates a full-length β; drop --p0".into())),
        (None, None) => return Err(NpError::InvalidConfig("one of --beta-scale or --target-type2 is required".into())),
    };
    let beta = Vector::from_fn(args.p, |i, _| if i < p0 { scale } else { 0.0 });
    let model = LdaModel::from_beta(&beta, ar1_matrix(args.p, args.rho))?;
    let clf = oracle_classifier(&model, alpha)?;
    let (type1, type2) = population_errors(&model, &clf)?;
    Ok(json!({
        "p": args.p,
        "p0": p0,
        "rho": args.rho,
        "beta_scale": scale,
        "mahalanobis": model.mahalanobis(),
        "threshold": clf.threshold,
        "type1": type1,
        "type2": type2,
    }))
}

fn umbrella(args: UmbrellaArgs) -> Result<Value, NpError> {
    let levels = NpLevels::new(args.alpha, args.delta)?;
    let min_size = umbrella_min_size(levels.alpha, levels.delta)?;
    let order = match umbrella_order(args.m, levels) {
        UmbrellaOrder::Order(k) => json!({
            "k_star": k,
            "violation_bound": binom_upper_tail(args.m, k, 1.0 - args.alpha),
        }),
        UmbrellaOrder::Infeasible => json!({ "k_star": Value::Null, "violation_bound": Value::Null }),
    };
    Ok(json!({ "m": args.m, "min_size": min_size, "order": order }))
}

fn rmt_check(args: RmtArgs) -> Result<Value, NpError> {
    let params = MpParams::new(args.r)?;
    let s = args.r.sqrt();
    let mut residual: f64 = 0.0;
    for z in upper_half_plane_grid(&params, args.grid) {
        let m = mp_m1(z, args.r)?;
        let w = mp_zm2(z, args.r)?;
        residual = residual.max((z * s * m * m + (z - 1.0 / s + s) * m + 1.0).norm());
        residual = residual.max((w * w / s + (z - s + 1.0 / s) * w + z).norm());
    }
    let exact = mp_values_at_zero(args.r)?;
    let numeric = mp_values_at_zero_numeric(args.r)?;
    let mut deviation: f64 = 0.0;
    for (a, b) in exact.m1_derivatives().into_iter().chain(exact.zm2_derivatives()).zip(
        numeric.m1_derivatives().into_iter().chain(numeric.zm2_derivatives()),
    ) {
        deviation = deviation.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok(json!({
        "r": args.r,
        "max_residual": residual,
        "m1_derivatives": exact.m1_derivatives(),
        "zm2_derivatives": exact.zm2_derivatives(),
        "max_derivative_deviation": deviation,
    }))
}

fn concentration_check(args: ConcentrationArgs) -> Result<Value, NpError> {
    let reports = concentration_sweep(args.r, args.mahalanobis, &args.ns, args.reps, SeedSpec::new(args.seed, 0))?;
    let rows: Vec<ReportRow> = reports.iter().flat_map(Vec::<ReportRow>::from).collect();
    if let Some(out) = &args.out {
        write_report_csv(out, &rows)?;
    }
    let rows: Vec<Value> = rows
        .iter()
        .map(|row| json!({ "quantity": row.quantity, "n": row.n, "p": row.p, "median_rel_dev": opt_real(row.median_rel_dev) }))
        .collect();
    Ok(json!({ "r": args.r, "reps": args.reps, "rows": rows }))
}

fn clt_check(args: CltArgs) -> Result<Value, NpError> {
    let levels = NpLevels::new(args.alpha, args.delta)?;
    let model = canonical_model(args.p, args.mahalanobis)?;
    let report = verify_theta_clt(&model, levels, args.n0, args.n1, args.reps, SeedSpec::new(args.seed, 0))?;
    if let Some(out) = &args.out {
        write_report_csv(out, &[ReportRow::from(&report)])?;
    }
    Ok(json!({
        "n": report.n,
        "p": report.p,
        "reps_used": report.reps_used,
        "ks_stat": report.ks_stat,
        "var_z": report.var_z,
    }))
}

fn screen(args: ScreenArgs) -> Result<Value, NpError> {
    let dataset = TabularDataset::from_csv(&args.data, &args.label_col)?;
    let mut plan = ScreenPlan::new(NpLevels::new(args.alpha, args.delta)?);
    plan.top_k = args.top_k;
    plan.reps = args.reps;
    plan.train_frac = args.train_frac;
    plan.seed = args.seed;
    let report = run_screen_eval(&dataset, &plan)?;
    if let Some(out) = &args.out {
        let fmt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), format_real);
        let mut text = String::from("rep,status,type1,type2,selected\n");
        for rep in &report.reps {
            let selected: Vec<&str> = rep.selected.iter().map(|&j| dataset.feature_names()[j].as_str()).collect();
            text += &format!("{},{},{},{},{}\n", rep.rep, rep.status, fmt(rep.type1), fmt(rep.type2), selected.join(";"));
        }
        fs::write(out, text).map_err(|e| io_error(out, e))?;
    }
    let failed = report.reps.iter().filter(|r| r.status != "ok").count();
    Ok(json!({
        "reps": report.reps.len(),
        "failed_reps": failed,
        "mean_type1": opt_real(report.mean_type1),
        "mean_type2": opt_real(report.mean_type2),
        "violation_rate": opt_real(report.violation_rate),
    }))
}

fn run(cli: Cli) -> Result<Value, NpError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Oracle(args) => oracle(args),
        Command::UmbrellaK(args) => umbrella(args),
        Command::RmtCheck(args) => rmt_check(args),
        Command::ConcentrationCheck(args) => concentration_check(args),
        Command::CltCheck(args) => clt_check(args),
        Command::Screen(args) => screen(args),
    }
}

fn fail(code: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": code, "message": message }));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail("InvalidArguments", e.to_string().trim_end().to_string()),
    };
    match run(cli) {
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.code(), e.to_string()),
    }
}
