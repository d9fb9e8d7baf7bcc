//! Declarative simulation configs and the built-in examples.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{NpLevels, DEFAULT_SPLIT_FRAC};
use crate::error::{NpError, Result};
use crate::linalg::{ar1_matrix, Vector};
use crate::model::{calibrate_flat_beta, LdaModel};
use crate::numerics::Probability;
use crate::sampling::FeatureDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Elda,
    Felda,
    UmbrellaLda,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Elda => "elda",
            Method::Felda => "felda",
            Method::UmbrellaLda => "umbrella_lda",
            Method::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Method::Elda, Method::Felda, Method::UmbrellaLda, Method::Oracle].into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The grid coordinate reported in aggregate rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N0,
    N1,
    P,
}

/// One simulation study: an LDA model family swept over a one-dimensional grid.
///
/// `n0_grid`, `n1_grid` and `p_grid` are zipped; lists of length one are
/// broadcast. Either the class sizes or the dimension may vary, not both.
/// The coefficient vector is `β = s·(1_{p0}, 0)` with `Σ = AR(1, rho)` and
/// `μ⁰ = 0`, where `s` is `beta_scale` or is calibrated per `p` so that the
/// oracle type II error equals `calibrate_target_type2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Fixed dimension; give either `p` or `p_grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    /// Number of leading nonzero coefficients; all coordinates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<usize>,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_target_type2: Option<f64>,
    pub n0_grid: Vec<usize>,
    pub n1_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<usize>>,
    pub alpha: Probability,
    pub delta: Probability,
    pub reps: usize,
    pub test_per_class: usize,
    pub distribution: FeatureDistribution,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    #[serde(default = "default_split_frac")]
    pub split_frac: f64,
}

fn default_split_frac() -> f64 {
    DEFAULT_SPLIT_FRAC
}

/// A fully resolved grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub index: usize,
    pub n0: usize,
    pub n1: usize,
    pub p: usize,
}

impl GridPoint {
    pub fn axis_value(&self, axis: Axis) -> usize {
        match axis {
            Axis::N0 => self.n0,
            Axis::N1 => self.n1,
            Axis::P => self.p,
        }
    }
}

fn invalid(msg: impl Into<String>) -> NpError {
    NpError::InvalidConfig(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NpError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn levels(&self) -> Result<NpLevels> {
        NpLevels::new(self.alpha.get(), self.delta.get())
    }

    fn p_values(&self) -> Result<Vec<usize>> {
        match (&self.p, &self.p_grid) {
            (Some(p), None) => Ok(vec![*p]),
            (None, Some(grid)) => Ok(grid.clone()),
            (Some(_), Some(_)) => Err(invalid("give either `p` or `p_grid`, not both")),
            (None, None) => Err(invalid("missing `p` or `p_grid`")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.levels()?;
        if self.beta_scale.is_some() == self.calibrate_target_type2.is_some() {
            return Err(invalid("exactly one of `beta_scale` and `calibrate_target_type2` must be set"));
        }
        if self.reps == 0 {
            return Err(invalid("`reps` must be at least 1"));
        }
        if self.test_per_class == 0 {
            return Err(invalid("`test_per_class` must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("`methods` is empty"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(invalid(format!("`rho` = {} outside (-1, 1)", self.rho)));
        }
        if !(self.split_frac > 0.0 && self.split_frac < 1.0) {
            return Err(invalid(format!("`split_frac` = {} outside (0, 1)", self.split_frac)));
        }
        if let FeatureDistribution::StudentT { df } = self.distribution {
            if !(df > 0.0) {
                return Err(invalid(format!("degrees of freedom {df} must be positive")));
            }
        }
        if self.p0 == Some(0) {
            return Err(invalid("`p0` must be at least 1"));
        }
        self.grid().map(|_| ())
    }

    /// The axis whose values label aggregate rows.
    pub fn axis(&self) -> Axis {
        let ps = self.p_values().unwrap_or_default();
        if ps.len() > 1 {
            Axis::P
        } else if self.n0_grid.len() > 1 || self.n1_grid.len() <= 1 {
            Axis::N0
        } else {
            Axis::N1
        }
    }

    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let ps = self.p_values()?;
        let lists = [("n0_grid", &self.n0_grid), ("n1_grid", &self.n1_grid), ("p_grid", &ps)];
        let mut len = 1;
        for (name, list) in lists {
            if list.is_empty() {
                return Err(invalid(format!("`{name}` is empty")));
            }
            if list.len() > 1 {
                if len > 1 && list.len() != len {
                    return Err(invalid(format!("`{name}` length {} differs from other varying grids", list.len())));
                }
                len = list.len();
            }
        }
        if ps.len() > 1 && (self.n0_grid.len() > 1 || self.n1_grid.len() > 1) {
            return Err(invalid("either the class sizes or the dimension may vary, not both"));
        }
        let at = |list: &[usize], i: usize| if list.len() == 1 { list[0] } else { list[i] };
        (0..len)
            .map(|i| {
                let point = GridPoint { index: i, n0: at(&self.n0_grid, i), n1: at(&self.n1_grid, i), p: at(&ps, i) };
                if point.p == 0 || point.n0 == 0 || point.n1 == 0 {
                    return Err(invalid(format!("grid point {i} has a zero size")));
                }
                Ok(point)
            })
            .collect()
    }

    /// Coefficient scale at dimension `p`.
    pub fn scale_for(&self, p: usize) -> Result<f64> {
        let block = self.p0.unwrap_or(p).min(p);
        match (self.beta_scale, self.calibrate_target_type2) {
            (Some(s), None) => Ok(s),
            (None, Some(target)) => calibrate_flat_beta(block, self.rho, self.alpha, target),
            _ => Err(invalid("exactly one of `beta_scale` and `calibrate_target_type2` must be set")),
        }
    }

    pub fn model_for(&self, p: usize) -> Result<LdaModel> {
        let block = self.p0.unwrap_or(p).min(p);
        let scale = self.scale_for(p)?;
        let mut beta = Vector::zeros(p);
        beta.rows_mut(0, block).fill(scale);
        LdaModel::from_beta(&beta, ar1_matrix(p, self.rho))
    }
}

pub const BUILTIN_EXAMPLES: [&str; 11] =
    ["toy", "1a", "1b", "1c", "1c_prime", "1c_star", "1d", "1d_prime", "2a", "2b", "3"];

const N_GRID: [usize; 10] = [20, 70, 120, 170, 220, 270, 320, 370, 500, 1000];
const P_GRID: [usize; 10] = [3, 6, 9, 12, 15, 18, 21, 24, 27, 30];

fn level(x: f64) -> Probability {
    Probability::open(x).expect("built-in level inside (0, 1)")
}

fn example1(name: &str, delta: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        p: Some(3),
        p0: Some(3),
        rho: 0.5,
        beta_scale: Some(1.2),
        calibrate_target_type2: None,
        n0_grid: N_GRID.to_vec(),
        n1_grid: N_GRID.to_vec(),
        p_grid: None,
        alpha: level(0.1),
        delta: level(delta),
        reps: 1000,
        test_per_class: 30_000,
        distribution: FeatureDistribution::Gaussian,
        methods: vec![Method::Elda, Method::Felda, Method::UmbrellaLda, Method::Oracle],
        base_seed: 20_240_101,
        split_frac: DEFAULT_SPLIT_FRAC,
    }
}

fn over_p(mut cfg: ExperimentConfig, n0: usize, n1: usize) -> ExperimentConfig {
    cfg.p = None;
    cfg.p_grid = Some(P_GRID.to_vec());
    cfg.n0_grid = vec![n0];
    cfg.n1_grid = vec![n1];
    cfg
}

/// The simulation settings of the reference study, by example id.
pub fn builtin_config(id: &str) -> Result<ExperimentConfig> {
    let cfg = match id {
        "toy" => ExperimentConfig {
            name: id.to_string(),
            rho: 0.0,
            n0_grid: vec![50],
            n1_grid: vec![50],
            alpha: level(0.05),
            delta: level(0.1),
            test_per_class: 50_000,
            methods: vec![Method::Elda, Method::Felda, Method::Oracle],
            ..example1(id, 0.1)
        },
        "1a" => example1(id, 0.1),
        "1b" => ExperimentConfig { n1_grid: vec![500], ..example1(id, 0.1) },
        "1c" => over_p(example1(id, 0.1), 125, 125),
        "1c_prime" => over_p(example1(id, 0.05), 125, 125),
        "1c_star" => over_p(example1(id, 0.01), 125, 125),
        "1d" => over_p(example1(id, 0.1), 125, 500),
        "1d_prime" => over_p(example1(id, 0.05), 125, 500),
        "2a" | "2b" => {
            let n1 = if id == "2a" { 125 } else { 500 };
            ExperimentConfig {
                p0: None,
                beta_scale: None,
                calibrate_target_type2: Some(0.236),
                ..over_p(example1(id, 0.1), 125, n1)
            }
        }
        "3" => ExperimentConfig { distribution: FeatureDistribution::StudentT { df: 4.0 }, ..example1(id, 0.1) },
        _ => return Err(NpError::UnknownExample(id.to_string())),
    };
    cfg.validate()?;
    Ok(cfg)
}
