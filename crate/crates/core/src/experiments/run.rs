//! Seeded, parallel execution of an experiment grid.

use std::collections::BTreeMap;
use std::fmt;

use log::info;
use rayon::prelude::*;

use crate::classifiers::{elda_train, felda_train, umbrella_train, LdaScorer, NpLevels};
use crate::error::{NpError, Result};
use crate::model::{oracle_classifier, population_errors, LdaModel, LinearClassifier};
use crate::numerics::SeedSpec;
use crate::sampling::{compute_stats, sample, FeatureDistribution, LabeledSample, SampleStats, TestSet};

use super::config::{Axis, ExperimentConfig, GridPoint, Method};

/// Outcome of one method on one repetition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum RepStatus {
    Ok,
    /// The method's own sample-size requirement is not met.
    Infeasible,
    /// Any other failure, by error code.
    Error(String),
}

impl fmt::Display for RepStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepStatus::Ok => f.write_str("ok"),
            RepStatus::Infeasible => f.write_str("infeasible"),
            RepStatus::Error(code) => f.write_str(code),
        }
    }
}

impl RepStatus {
    pub fn parse(s: &str) -> Self {
        match s {
            "ok" => RepStatus::Ok,
            "infeasible" => RepStatus::Infeasible,
            other => RepStatus::Error(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionRecord {
    pub method: Method,
    pub rep_index: usize,
    pub n0: usize,
    pub n1: usize,
    pub p: usize,
    pub alpha: f64,
    pub delta: f64,
    pub threshold: Option<f64>,
    pub type1_emp: Option<f64>,
    pub type2_emp: Option<f64>,
    /// Exact errors under the Gaussian model; absent otherwise.
    pub type1_pop: Option<f64>,
    pub type2_pop: Option<f64>,
    pub status: RepStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub axis_value: usize,
    /// Mean empirical test-set errors over ok repetitions.
    pub mean_type1: Option<f64>,
    pub mean_type2: Option<f64>,
    /// Share of ok repetitions whose type I error exceeds alpha; population
    /// errors are used when available, empirical ones otherwise.
    pub violation_rate: Option<f64>,
    pub feasible_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub axis: Axis,
    pub records: Vec<RepetitionRecord>,
    pub aggregates: Vec<AggregateRow>,
}

/// Stream index layout inside a grid point: four roles per repetition.
const ROLE_TRAIN: u64 = 0;
const ROLE_TEST: u64 = 1;
const ROLE_SPLIT: u64 = 2;

/// Seed for `role` in repetition `rep` at grid point `grid_index`.
pub fn rep_seed(base_seed: u64, grid_index: usize, rep: usize, role: u64) -> SeedSpec {
    let grid = SeedSpec::new(base_seed, 0).derive(grid_index as u64);
    SeedSpec::new(grid.base_seed, rep as u64 * 4 + role)
}

struct PointContext {
    point: GridPoint,
    model: LdaModel,
    oracle: Option<LinearClassifier>,
}

fn status_of(method: Method, e: &NpError) -> RepStatus {
    match e {
        NpError::InsufficientSamples { .. } if method == Method::UmbrellaLda => RepStatus::Infeasible,
        other => RepStatus::Error(other.code().to_string()),
    }
}

fn train_method(
    method: Method,
    cfg: &ExperimentConfig,
    levels: NpLevels,
    ctx: &PointContext,
    train: &LabeledSample,
    stats: &Result<SampleStats>,
    rep: usize,
) -> std::result::Result<LinearClassifier, RepStatus> {
    let fail = |e: &NpError| status_of(method, e);
    match method {
        Method::Elda => elda_train(stats.as_ref().map_err(fail)?, levels).map_err(|e| fail(&e)),
        Method::Felda => felda_train(stats.as_ref().map_err(fail)?, levels).map_err(|e| fail(&e)),
        Method::UmbrellaLda => {
            let seed = rep_seed(cfg.base_seed, ctx.point.index, rep, ROLE_SPLIT);
            let clf = umbrella_train(train, levels, cfg.split_frac, &LdaScorer, seed).map_err(|e| fail(&e))?;
            clf.as_linear().ok_or_else(|| RepStatus::Error("InvalidData".into()))
        }
        Method::Oracle => ctx.oracle.clone().ok_or_else(|| RepStatus::Error("InvalidData".into())),
    }
}

fn run_rep(cfg: &ExperimentConfig, levels: NpLevels, ctx: &PointContext, rep: usize) -> Result<Vec<RepetitionRecord>> {
    let GridPoint { index, n0, n1, p } = ctx.point;
    let train = sample(&ctx.model, cfg.distribution, n0, n1, rep_seed(cfg.base_seed, index, rep, ROLE_TRAIN))?;
    let stats = compute_stats(&train);
    let test = TestSet::draw(
        &ctx.model,
        cfg.distribution,
        cfg.test_per_class,
        rep_seed(cfg.base_seed, index, rep, ROLE_TEST),
    )?;
    let gaussian = cfg.distribution == FeatureDistribution::Gaussian;

    Ok(cfg
        .methods
        .iter()
        .map(|&method| {
            let mut record = RepetitionRecord {
                method,
                rep_index: rep,
                n0,
                n1,
                p,
                alpha: cfg.alpha.get(),
                delta: cfg.delta.get(),
                threshold: None,
                type1_emp: None,
                type2_emp: None,
                type1_pop: None,
                type2_pop: None,
                status: RepStatus::Ok,
            };
            match train_method(method, cfg, levels, ctx, &train, &stats, rep) {
                Ok(clf) => {
                    let evaluated = test.errors(&clf).and_then(|emp| {
                        let pop = if gaussian { Some(population_errors(&ctx.model, &clf)?) } else { None };
                        Ok((emp, pop))
                    });
                    match evaluated {
                        Ok(((t1, t2), pop)) => {
                            record.threshold = Some(clf.threshold);
                            record.type1_emp = Some(t1);
                            record.type2_emp = Some(t2);
                            record.type1_pop = pop.map(|e| e.0);
                            record.type2_pop = pop.map(|e| e.1);
                        }
                        Err(e) => record.status = status_of(method, &e),
                    }
                }
                Err(status) => record.status = status,
            }
            record
        })
        .collect())
}

fn sort_key(r: &RepetitionRecord, axis: Axis) -> (&'static str, usize, usize) {
    let point = GridPoint { index: 0, n0: r.n0, n1: r.n1, p: r.p };
    (r.method.name(), point.axis_value(axis), r.rep_index)
}

/// Runs every grid point and repetition on a pool of `workers` threads.
///
/// Each repetition draws its training sample, test set and (umbrella) split
/// from its own seed, and records are sorted before aggregation, so the
/// output does not depend on `workers`. Per-repetition failures are recorded
/// in the status column rather than aborting the run.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let levels = cfg.levels()?;
    let axis = cfg.axis();
    let contexts = cfg
        .grid()?
        .into_iter()
        .map(|point| {
            let model = cfg.model_for(point.p)?;
            let oracle = oracle_classifier(&model, cfg.alpha).ok();
            Ok(PointContext { point, model, oracle })
        })
        .collect::<Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| NpError::InvalidConfig(format!("thread pool: {e}")))?;
    info!("running `{}`: {} grid points x {} reps on {} workers", cfg.name, contexts.len(), cfg.reps, workers);

    let tasks: Vec<(usize, usize)> =
        (0..contexts.len()).flat_map(|g| (0..cfg.reps).map(move |rep| (g, rep))).collect();
    let nested: Vec<Vec<RepetitionRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, rep)| run_rep(cfg, levels, &contexts[g], rep))
            .collect::<Result<_>>()
    })?;
    let mut records: Vec<RepetitionRecord> = nested.into_iter().flatten().collect();
    records.sort_by(|a, b| sort_key(a, axis).cmp(&sort_key(b, axis)));
    let aggregates = aggregate(&records, axis, cfg.alpha.get());
    Ok(ExperimentOutput { axis, records, aggregates })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Per method and axis value: means over ok repetitions, violation rate and
/// feasible share. Sorted by `(method, axis_value)`.
pub fn aggregate(records: &[RepetitionRecord], axis: Axis, alpha: f64) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&'static str, usize), Vec<&RepetitionRecord>> = BTreeMap::new();
    for r in records {
        let (method, value, _) = sort_key(r, axis);
        groups.entry((method, value)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, axis_value), mut group)| {
            group.sort_by_key(|r| r.rep_index);
            let ok: Vec<&RepetitionRecord> = group.iter().copied().filter(|r| r.status == RepStatus::Ok).collect();
            let t1: Vec<f64> = ok.iter().filter_map(|r| r.type1_emp).collect();
            let t2: Vec<f64> = ok.iter().filter_map(|r| r.type2_emp).collect();
            let violations: Vec<f64> = ok
                .iter()
                .filter_map(|r| r.type1_pop.or(r.type1_emp))
                .map(|t| if t > alpha { 1.0 } else { 0.0 })
                .collect();
            AggregateRow {
                method: Method::from_name(method).expect("method name round-trips"),
                axis_value,
                mean_type1: mean(&t1),
                mean_type2: mean(&t2),
                violation_rate: mean(&violations),
                feasible_fraction: ok.len() as f64 / group.len() as f64,
            }
        })
        .collect()
}
