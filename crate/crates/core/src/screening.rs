//! Two-sample t screening and repeated stratified-split evaluation of eLDA
//! on tabular data with many more features than samples.

use std::io::Read;
use std::path::Path;

use log::warn;
use rand::seq::index;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::classifiers::{elda_train, NpLevels};
use crate::error::{NpError, Result};
use crate::linalg::{Matrix, Vector};
use crate::numerics::{rng_stream, SeedSpec};
use crate::sampling::{compute_stats, LabeledSample};

/// Feature matrix with binary labels, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl TabularDataset {
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(NpError::DimensionMismatch { expected: features.nrows(), found: labels.len() });
        }
        if feature_names.len() != features.ncols() {
            return Err(NpError::DimensionMismatch { expected: features.ncols(), found: feature_names.len() });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(NpError::InvalidData(format!("label {bad} is not 0 or 1")));
        }
        for class in [0u8, 1] {
            if !labels.contains(&class) {
                return Err(NpError::InvalidData(format!("class {class} has no observations")));
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(NpError::InvalidData("non-finite feature value".into()));
        }
        Ok(Self { features, labels, feature_names })
    }

    /// Reads a CSV with a header row; `label_col` holds 0/1 and every other
    /// column is a numeric feature. Empty or non-numeric cells are errors.
    pub fn from_reader<R: Read>(input: R, label_col: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let header = reader.headers().map_err(|e| NpError::InvalidData(e.to_string()))?.clone();
        let label_idx = header
            .iter()
            .position(|h| h == label_col)
            .ok_or_else(|| NpError::InvalidData(format!("no column named `{label_col}`")))?;
        let feature_names: Vec<String> =
            header.iter().enumerate().filter(|&(i, _)| i != label_idx).map(|(_, h)| h.to_string()).collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (line, row) in reader.records().enumerate() {
            let row = row.map_err(|e| NpError::InvalidData(e.to_string()))?;
            for (i, cell) in row.iter().enumerate() {
                let cell = cell.trim();
                if i == label_idx {
                    labels.push(match cell {
                        "0" => 0,
                        "1" => 1,
                        other => {
                            return Err(NpError::InvalidData(format!("row {}: label `{other}` is not 0 or 1", line + 1)))
                        }
                    });
                } else {
                    let v: f64 = cell.parse().map_err(|_| {
                        NpError::InvalidData(format!("row {}, column `{}`: `{cell}` is not a number", line + 1, &header[i]))
                    })?;
                    values.push(v);
                }
            }
        }
        let features = Matrix::from_row_slice(labels.len(), feature_names.len(), &values);
        Self::new(features, labels, feature_names)
    }

    pub fn from_csv(path: &Path, label_col: &str) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| NpError::io(path, e))?;
        Self::from_reader(file, label_col)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_rows(&self, class: u8) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Same labels with column `j` replaced.
    pub fn with_feature(&self, j: usize, column: &[f64]) -> Result<Self> {
        if column.len() != self.features.nrows() {
            return Err(NpError::DimensionMismatch { expected: self.features.nrows(), found: column.len() });
        }
        let mut out = self.clone();
        for (i, &v) in column.iter().enumerate() {
            out.features[(i, j)] = v;
        }
        Ok(out)
    }
}

/// Pooled-variance two-sample t statistic (class 0 minus class 1) and its
/// two-sided p-value on `n0 + n1 − 2` degrees of freedom.
fn pooled_t(x: &Matrix, rows0: &[usize], rows1: &[usize], j: usize) -> Result<(f64, f64)> {
    let (n0, n1) = (rows0.len(), rows1.len());
    if n0 < 2 || n1 < 2 {
        return Err(NpError::InsufficientSamples { needed: 2, got: n0.min(n1) });
    }
    let moments = |rows: &[usize]| {
        let mean = rows.iter().map(|&i| x[(i, j)]).sum::<f64>() / rows.len() as f64;
        let ss = rows.iter().map(|&i| (x[(i, j)] - mean).powi(2)).sum::<f64>();
        (mean, ss)
    };
    let (m0, ss0) = moments(rows0);
    let (m1, ss1) = moments(rows1);
    let df = (n0 + n1 - 2) as f64;
    let pooled = (ss0 + ss1) / df;
    let scale = m0.abs().max(m1.abs()).max(1.0);
    if !(pooled > (f64::EPSILON * scale).powi(2)) {
        warn!("feature {j} has zero pooled variance; assigning p-value 1");
        return Ok((0.0, 1.0));
    }
    let t = (m0 - m1) / (pooled * (1.0 / n0 as f64 + 1.0 / n1 as f64)).sqrt();
    let p = beta_reg(df / 2.0, 0.5, df / (df + t * t));
    Ok((t, p.clamp(0.0, 1.0)))
}

pub fn two_sample_t(dataset: &TabularDataset, feature_index: usize) -> Result<(f64, f64)> {
    if feature_index >= dataset.n_features() {
        return Err(NpError::DimensionMismatch { expected: dataset.n_features(), found: feature_index });
    }
    pooled_t(&dataset.features, &dataset.class_rows(0), &dataset.class_rows(1), feature_index)
}

fn top_k_on_rows(x: &Matrix, rows0: &[usize], rows1: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > x.ncols() {
        return Err(NpError::DimensionMismatch { expected: x.ncols(), found: k });
    }
    let mut ranked = (0..x.ncols())
        .map(|j| pooled_t(x, rows0, rows1, j).map(|(_, p)| (p, j)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, j)| j).collect())
}

/// Indices of the `k` smallest p-values, ties broken by smaller index.
pub fn screen_top_k(dataset: &TabularDataset, k: usize) -> Result<Vec<usize>> {
    top_k_on_rows(&dataset.features, &dataset.class_rows(0), &dataset.class_rows(1), k)
}

/// Repeated-split evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenPlan {
    pub top_k: usize,
    pub train_frac: f64,
    pub reps: usize,
    pub levels: NpLevels,
    pub seed: u64,
}

impl ScreenPlan {
    pub fn new(levels: NpLevels) -> Self {
        Self { top_k: 40, train_frac: 0.7, reps: 100, levels, seed: 0 }
    }
}

/// Row indices of one stratified train/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train0: Vec<usize>,
    pub train1: Vec<usize>,
    pub test0: Vec<usize>,
    pub test1: Vec<usize>,
}

/// The split used by repetition `rep` of [`run_screen_eval`]: within each
/// class `round(train_frac · n_a)` rows chosen uniformly go to training.
pub fn rep_split(dataset: &TabularDataset, plan: &ScreenPlan, rep: usize) -> Split {
    let mut rng = rng_stream(SeedSpec::new(plan.seed, rep as u64));
    let mut part = |rows: Vec<usize>| {
        let take = (plan.train_frac * rows.len() as f64).round() as usize;
        let mut chosen = vec![false; rows.len()];
        for i in index::sample(&mut rng, rows.len(), take) {
            chosen[i] = true;
        }
        let train: Vec<usize> = rows.iter().zip(&chosen).filter(|(_, &c)| c).map(|(&r, _)| r).collect();
        let test: Vec<usize> = rows.iter().zip(&chosen).filter(|(_, &c)| !c).map(|(&r, _)| r).collect();
        (train, test)
    };
    let (train0, test0) = part(dataset.class_rows(0));
    let (train1, test1) = part(dataset.class_rows(1));
    Split { train0, train1, test0, test1 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenRep {
    pub rep: usize,
    pub selected: Vec<usize>,
    pub type1: Option<f64>,
    pub type2: Option<f64>,
    /// `ok` or an error code.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenReport {
    pub reps: Vec<ScreenRep>,
    pub mean_type1: Option<f64>,
    pub mean_type2: Option<f64>,
    /// Share of ok repetitions whose test type I error exceeds alpha.
    pub violation_rate: Option<f64>,
}

fn submatrix(x: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| x[(rows[i], cols[j])])
}

/// Screens on the training rows of `split`, trains eLDA on the selected
/// features and reports test-set errors.
pub fn screen_rep(dataset: &TabularDataset, plan: &ScreenPlan, split: &Split, rep: usize) -> ScreenRep {
    let x = &dataset.features;
    let mut out = ScreenRep { rep, selected: Vec::new(), type1: None, type2: None, status: "ok".into() };
    let run = |out: &mut ScreenRep| -> Result<()> {
        out.selected = top_k_on_rows(x, &split.train0, &split.train1, plan.top_k)?;
        let cols = &out.selected;
        let train = LabeledSample::new(submatrix(x, &split.train0, cols), submatrix(x, &split.train1, cols))?;
        let clf = elda_train(&compute_stats(&train)?, plan.levels)?;
        let rate = |rows: &[usize], positive: bool| -> Result<f64> {
            let mut hits = 0usize;
            for &i in rows {
                let row = Vector::from_iterator(cols.len(), cols.iter().map(|&j| x[(i, j)]));
                if (clf.predict(&row)? == 1) == positive {
                    hits += 1;
                }
            }
            Ok(hits as f64 / rows.len().max(1) as f64)
        };
        out.type1 = Some(rate(&split.test0, true)?);
        out.type2 = Some(rate(&split.test1, false)?);
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.status = e.code().to_string();
        out.type1 = None;
        out.type2 = None;
    }
    out
}

/// Repeats stratified splitting, train-only screening and eLDA evaluation.
pub fn run_screen_eval(dataset: &TabularDataset, plan: &ScreenPlan) -> Result<ScreenReport> {
    if plan.top_k == 0 || plan.top_k > dataset.n_features() {
        return Err(NpError::DimensionMismatch { expected: dataset.n_features(), found: plan.top_k });
    }
    if !(plan.train_frac > 0.0 && plan.train_frac < 1.0) {
        return Err(NpError::InvalidConfig(format!("train fraction {} outside (0, 1)", plan.train_frac)));
    }
    let n_train: usize = [0u8, 1]
        .iter()
        .map(|&c| (plan.train_frac * dataset.class_rows(c).len() as f64).round() as usize)
        .sum();
    if n_train < plan.top_k + 3 {
        return Err(NpError::InsufficientSamples { needed: plan.top_k + 3, got: n_train });
    }
    let reps: Vec<ScreenRep> =
        (0..plan.reps).into_par_iter().map(|rep| screen_rep(dataset, plan, &rep_split(dataset, plan, rep), rep)).collect();
    let ok: Vec<&ScreenRep> = reps.iter().filter(|r| r.status == "ok").collect();
    let mean = |f: &dyn Fn(&ScreenRep) -> f64| {
        (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
    };
    let alpha = plan.levels.alpha.get();
    Ok(ScreenReport {
        mean_type1: mean(&|r| r.type1.unwrap_or(f64::NAN)),
        mean_type2: mean(&|r| r.type2.unwrap_or(f64::NAN)),
        violation_rate: mean(&|r| if r.type1.unwrap_or(f64::NAN) > alpha { 1.0 } else { 0.0 }),
        reps,
    })
}
