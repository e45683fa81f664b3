//! Flat TOML run files. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use npcure_core::bandwidth::{BandwidthGrid, BootstrapConfig, PilotRule, StageSpec};
use npcure_core::math::lin_space;
use npcure_core::sim::{default_incidence_grid, default_latency_grid, Estimator, ExperimentPlan};
use npcure_core::{KernelSpec, ModelId, ModelTruth};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::parse(path.display().to_string(), e.to_string()))
}

/// Either an explicit list or `points` equispaced values on `[min, max]`.
fn grid(
    name: &str,
    values: &Option<Vec<f64>>,
    min: Option<f64>,
    max: Option<f64>,
    points: Option<usize>,
) -> CliResult<Option<Vec<f64>>> {
    match (values, min, max, points) {
        (Some(v), None, None, None) => {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Usage(format!("{name}: values must be finite and non-empty")));
            }
            Ok(Some(v.clone()))
        }
        (None, Some(lo), Some(hi), Some(n)) => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 || (n == 1 && lo != hi) {
                return Err(CliError::Usage(format!("{name}: need min <= max and points >= 1")));
            }
            Ok(Some(lin_space(lo, hi, n)))
        }
        (None, None, None, None) => Ok(None),
        _ => Err(CliError::Usage(format!(
            "{name}: give either a value list or all of min, max and points"
        ))),
    }
}

fn log_grid(name: &str, values: &Option<Vec<f64>>, min: Option<f64>, max: Option<f64>, points: Option<usize>) -> CliResult<Option<BandwidthGrid>> {
    let usage = |e: npcure_core::Error| CliError::Usage(format!("{name}: {e}"));
    match (values, min, max, points) {
        (Some(v), None, None, None) => BandwidthGrid::explicit(v.clone()).map(Some).map_err(usage),
        (None, Some(lo), Some(hi), Some(n)) => BandwidthGrid::log_spaced(lo, hi, n).map(Some).map_err(usage),
        (None, None, None, None) => Ok(None),
        _ => Err(CliError::Usage(format!(
            "{name}: give either a value list or all of min, max and points"
        ))),
    }
}

pub fn parse_pilot(name: &str, knn: Option<usize>) -> CliResult<PilotRule> {
    match name {
        "global" => Ok(PilotRule::Global),
        "local" => Ok(PilotRule::LocalKnn { k: knn }),
        other => Err(CliError::Usage(format!("pilot must be `global` or `local`, got `{other}`"))),
    }
}

/// Settings of `npcure fit`. Command-line flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub group: Option<String>,
    pub x: Option<Vec<f64>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub x_points: Option<usize>,
    /// Fixed incidence bandwidth; when absent the bootstrap selector runs.
    pub h: Option<f64>,
    pub pilot: Option<String>,
    pub knn: Option<usize>,
    pub smooth: Option<bool>,
    pub resamples: Option<usize>,
    pub grid_points: Option<usize>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    /// Latency bandwidth; when present a latency table is written.
    pub b: Option<f64>,
    pub t_points: Option<usize>,
    pub seed: Option<u64>,
}

pub const DEFAULT_X_POINTS: usize = 41;
pub const DEFAULT_T_POINTS: usize = 101;
pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_GRID_POINTS: usize = 21;
pub const DEFAULT_H_MIN: f64 = 0.2;

impl FitConfig {
    /// `other` wins wherever it is set.
    pub fn overlay(self, other: FitConfig) -> FitConfig {
        macro_rules! pick {
            ($($f:ident),*) => { FitConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(data, out_dir, group, x, x_min, x_max, x_points, h, pilot, knn, smooth, resamples, grid_points, h_min, h_max, b, t_points, seed)
    }

    /// Covariate grid, defaulting to equispaced points over `range`.
    pub fn x_grid(&self, range: (f64, f64)) -> CliResult<Vec<f64>> {
        if self.x.is_none() && self.x_min.is_none() && self.x_max.is_none() && self.x_points.is_none() {
            return Ok(lin_space(range.0, range.1, DEFAULT_X_POINTS));
        }
        if self.x.is_none() {
            let lo = self.x_min.unwrap_or(range.0);
            let hi = self.x_max.unwrap_or(range.1);
            let n = self.x_points.unwrap_or(DEFAULT_X_POINTS);
            return Ok(grid("x grid", &None, Some(lo), Some(hi), Some(n))?.unwrap());
        }
        Ok(grid("x grid", &self.x, self.x_min, self.x_max, self.x_points)?.unwrap())
    }

    pub fn pilot_rule(&self) -> CliResult<PilotRule> {
        parse_pilot(self.pilot.as_deref().unwrap_or("local"), self.knn)
    }

    /// Selector settings for a dataset with the given covariate range.
    pub fn bootstrap(&self, covariate_range: f64) -> CliResult<BootstrapConfig> {
        let mut cfg = BootstrapConfig::data(covariate_range, self.seed.unwrap_or(0));
        cfg.pilot = self.pilot_rule()?;
        cfg.stages = vec![StageSpec {
            resamples: self.resamples.unwrap_or(DEFAULT_RESAMPLES),
            grid_size: self.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
        }];
        cfg.range = (self.h_min.unwrap_or(DEFAULT_H_MIN), self.h_max.unwrap_or(covariate_range));
        cfg.validate().map_err(|e| CliError::Usage(format!("selector settings: {e}")))?;
        Ok(cfg)
    }
}

/// Monte Carlo plan file of `npcure benchmark`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub model: u8,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_studies")]
    pub studies: Vec<String>,
    #[serde(default = "default_estimator")]
    pub estimator: String,
    pub x: Option<Vec<f64>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub x_points: Option<usize>,
    pub h: Option<Vec<f64>>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub h_points: Option<usize>,
    pub b: Option<Vec<f64>>,
    pub b_min: Option<f64>,
    pub b_max: Option<f64>,
    pub b_points: Option<usize>,
    pub time_points: Option<usize>,
    /// `[resamples, grid points]` per selector stage.
    pub bootstrap_stages: Option<Vec<[usize; 2]>>,
    pub bootstrap_range: Option<[f64; 2]>,
    pub pilot: Option<String>,
    pub knn: Option<usize>,
}

fn default_studies() -> Vec<String> {
    vec!["incidence".into(), "latency".into(), "bootstrap".into()]
}

fn default_estimator() -> String {
    "kernel".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Studies {
    pub incidence: bool,
    pub latency: bool,
    pub bootstrap: bool,
}

impl PlanFile {
    pub fn studies(&self) -> CliResult<Studies> {
        let mut s = Studies::default();
        for name in &self.studies {
            match name.as_str() {
                "incidence" => s.incidence = true,
                "latency" => s.latency = true,
                "bootstrap" => s.bootstrap = true,
                other => return Err(CliError::Usage(format!("unknown study `{other}`"))),
            }
        }
        if s == Studies::default() {
            return Err(CliError::Usage("no study selected".into()));
        }
        Ok(s)
    }

    pub fn experiment(&self) -> CliResult<ExperimentPlan> {
        let id = ModelId::from_number(self.model)
            .ok_or_else(|| CliError::Usage(format!("model must be 1 or 2, got {}", self.model)))?;
        let mut plan = ExperimentPlan::new(ModelTruth::new(id), self.sample_sizes.clone(), self.replications, self.seed);
        if let Some(x) = grid("x grid", &self.x, self.x_min, self.x_max, self.x_points)? {
            plan.covariates = x;
        }
        plan.incidence_grid = log_grid("h grid", &self.h, self.h_min, self.h_max, self.h_points)?
            .unwrap_or_else(default_incidence_grid);
        plan.latency_grid = log_grid("b grid", &self.b, self.b_min, self.b_max, self.b_points)?
            .unwrap_or_else(default_latency_grid);
        if let Some(t) = self.time_points {
            plan.time_points = t;
        }
        plan.kernel = KernelSpec::Epanechnikov;
        plan.estimator = match self.estimator.as_str() {
            "kernel" => Estimator::Kernel,
            "truth" => Estimator::Truth,
            other => return Err(CliError::Usage(format!("estimator must be `kernel` or `truth`, got `{other}`"))),
        };
        plan.validate().map_err(|e| CliError::Usage(format!("plan: {e}")))?;
        Ok(plan)
    }

    pub fn bootstrap(&self) -> CliResult<BootstrapConfig> {
        let mut cfg = BootstrapConfig::simulation(self.seed);
        if let Some(stages) = &self.bootstrap_stages {
            cfg.stages = stages
                .iter()
                .map(|&[resamples, grid_size]| StageSpec { resamples, grid_size })
                .collect();
        }
        if let Some([lo, hi]) = self.bootstrap_range {
            cfg.range = (lo, hi);
        }
        if let Some(p) = &self.pilot {
            cfg.pilot = parse_pilot(p, self.knn)?;
        }
        cfg.validate().map_err(|e| CliError::Usage(format!("bootstrap settings: {e}")))?;
        Ok(cfg)
    }
}
