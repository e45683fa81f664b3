//! Data generation from the benchmark models and the Monte Carlo studies
//! built on it.
//!
//! Replication `r` at sample size `n` always uses the sample drawn from
//! `root(seed).child(SAMPLE).child(n).child(r)`, so the incidence, latency
//! and bootstrap studies of one plan see the same data. Per-replication
//! results are folded in replication order; the executor only decides
//! where they are computed.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::bandwidth::{select_bandwidth_with, BandwidthGrid, BootstrapConfig};
use crate::beran::{Observation, SurvivalSample};
use crate::cure::{incidence, latency_curve};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::kernel::KernelSpec;
use crate::math::{exp, exp_m1, lin_space, ln, powf};
use crate::rng::{exponential, tag, uniform, uniform_open0, Substream};
use crate::stats::quantile;
use crate::truth::{ModelId, ModelTruth, CENSORING_RATE, COVARIATE_HIGH, COVARIATE_LOW};

const MODEL2_FAST_RATE: f64 = 100.0;
const BLOCK: usize = 64;

/// Draw `n` subjects from `truth`.
pub fn gen_sample(truth: &ModelTruth, n: usize, stream: Substream) -> SurvivalSample {
    let mut rng = stream.rng();
    let obs: Vec<Observation> = (0..n).map(|_| draw_subject(truth, &mut rng)).collect();
    SurvivalSample::new(obs).expect("generated sample is valid")
}

/// `gen_sample` from the sample substream of `seed`.
pub fn gen_sample_seeded(truth: &ModelTruth, n: usize, seed: u64) -> SurvivalSample {
    gen_sample(truth, n, Substream::root(seed).child(tag::SAMPLE))
}

/// One subject, also returning the latent event time (`+∞` when cured).
pub fn draw_subject_latent<R: RngCore + ?Sized>(truth: &ModelTruth, rng: &mut R) -> (Observation, f64) {
    let x = COVARIATE_LOW + (COVARIATE_HIGH - COVARIATE_LOW) * uniform(rng);
    let uncured = uniform(rng) < truth.uncured_probability(x);
    let y = if uncured { draw_latency(truth, x, rng) } else { f64::INFINITY };
    let c = exponential(rng, CENSORING_RATE);
    let (t, delta) = if y <= c { (y, true) } else { (c, false) };
    assert!(t.is_finite(), "observed time must be finite");
    (Observation::new(x, t, delta), y)
}

fn draw_subject<R: RngCore + ?Sized>(truth: &ModelTruth, rng: &mut R) -> Observation {
    draw_subject_latent(truth, rng).0
}

/// Event time from the latency law `S0(·|x)`.
pub fn draw_latency<R: RngCore + ?Sized>(truth: &ModelTruth, x: f64, rng: &mut R) -> f64 {
    match truth.id {
        ModelId::Model1 => {
            let l = ModelTruth::model1_rate(x);
            let tail = exp(-l * truth.effective_tau0());
            let s = uniform(rng);
            -ln(s * -exp_m1(-l * truth.effective_tau0()) + tail) / l
        }
        ModelId::Model2 => {
            let rate = if uniform(rng) < 0.5 {
                ModelTruth::model2_rate(x)
            } else {
                MODEL2_FAST_RATE
            };
            powf(-ln(uniform_open0(rng)) / rate, 0.2)
        }
    }
}

/// Which estimator a study scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    #[default]
    Kernel,
    /// The true curves in place of the estimates; every error is zero.
    Truth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub model: ModelTruth,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub covariates: Vec<f64>,
    pub incidence_grid: BandwidthGrid,
    pub latency_grid: BandwidthGrid,
    /// Points of the trapezoid grid on `[0, effective τ0]`.
    pub time_points: usize,
    pub master_seed: u64,
    pub kernel: KernelSpec,
    pub estimator: Estimator,
}

pub fn default_covariate_grid() -> Vec<f64> {
    lin_space(COVARIATE_LOW, COVARIATE_HIGH, 81)
}

pub fn default_incidence_grid() -> BandwidthGrid {
    BandwidthGrid::log_spaced(1.2, 20.0, 100).expect("valid grid")
}

pub fn default_latency_grid() -> BandwidthGrid {
    BandwidthGrid::log_spaced(10.0, 40.0, 100).expect("valid grid")
}

impl ExperimentPlan {
    pub fn new(model: ModelTruth, sample_sizes: Vec<usize>, replications: usize, master_seed: u64) -> Self {
        ExperimentPlan {
            model,
            sample_sizes,
            replications,
            covariates: default_covariate_grid(),
            incidence_grid: default_incidence_grid(),
            latency_grid: default_latency_grid(),
            time_points: 512,
            master_seed,
            kernel: KernelSpec::Epanechnikov,
            estimator: Estimator::Kernel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("at least one replication required"));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::InvalidInput("sample sizes must be non-empty and positive"));
        }
        if self.covariates.is_empty() || self.covariates.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("covariate grid must be non-empty and finite"));
        }
        if self.time_points < 2 {
            return Err(Error::InvalidInput("time grid needs at least two points"));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Vec<f64> {
        lin_space(0.0, self.model.effective_tau0(), self.time_points)
    }

    /// Sample of replication `r` at size `n`.
    pub fn sample(&self, n: usize, r: usize) -> SurvivalSample {
        let stream = Substream::root(self.master_seed)
            .child(tag::SAMPLE)
            .child(n as u64)
            .child(r as u64);
        gen_sample(&self.model, n, stream)
    }
}

/// Mean errors over a `(covariate, bandwidth)` table, row-major by covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub covariates: Vec<f64>,
    pub bandwidths: Vec<f64>,
    sums: Vec<f64>,
    counts: Vec<usize>,
    failures: Vec<usize>,
}

impl ErrorTable {
    fn new(covariates: &[f64], bandwidths: &[f64]) -> Self {
        let cells = covariates.len() * bandwidths.len();
        ErrorTable {
            covariates: covariates.to_vec(),
            bandwidths: bandwidths.to_vec(),
            sums: alloc::vec![0.0; cells],
            counts: alloc::vec![0; cells],
            failures: alloc::vec![0; cells],
        }
    }

    fn index(&self, xi: usize, hi: usize) -> usize {
        xi * self.bandwidths.len() + hi
    }

    fn add(&mut self, cells: &[Option<f64>]) {
        for (k, c) in cells.iter().enumerate() {
            match c {
                Some(v) => {
                    self.sums[k] += v;
                    self.counts[k] += 1;
                }
                None => self.failures[k] += 1,
            }
        }
    }

    /// Mean error, `None` if every replication failed in this cell.
    pub fn value(&self, xi: usize, hi: usize) -> Option<f64> {
        let k = self.index(xi, hi);
        (self.counts[k] > 0).then(|| self.sums[k] / self.counts[k] as f64)
    }

    pub fn successes(&self, xi: usize, hi: usize) -> usize {
        self.counts[self.index(xi, hi)]
    }

    pub fn failures(&self, xi: usize, hi: usize) -> usize {
        self.failures[self.index(xi, hi)]
    }

    pub fn total_failures(&self) -> usize {
        self.failures.iter().sum()
    }

    /// Grid index of the smallest mean error at covariate `xi`.
    pub fn argmin(&self, xi: usize) -> Option<usize> {
        (0..self.bandwidths.len())
            .filter_map(|hi| self.value(xi, hi).map(|v| (hi, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(hi, _)| hi)
    }

    pub fn row(&self, xi: usize) -> Vec<Option<f64>> {
        (0..self.bandwidths.len()).map(|hi| self.value(xi, hi)).collect()
    }
}

/// Bootstrap selections at one covariate value.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub x: f64,
    /// Selected bandwidth per replication; `None` where selection failed.
    pub selections: Vec<Option<f64>>,
    pub boundary_hits: usize,
    /// 25th, 50th and 75th percentiles of the selections.
    pub percentiles: [f64; 3],
    /// Monte Carlo incidence MSE at each percentile bandwidth.
    pub percentile_mse: [f64; 3],
    pub oracle_bandwidth: f64,
    pub oracle_mse: f64,
}

impl BootstrapSummary {
    pub fn failures(&self) -> usize {
        self.selections.iter().filter(|s| s.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub sample_size: usize,
    pub replications: usize,
    pub incidence: Option<ErrorTable>,
    pub latency: Option<ErrorTable>,
    pub bootstrap: Option<Vec<BootstrapSummary>>,
}

impl MonteCarloReport {
    fn empty(n: usize, m: usize) -> Self {
        MonteCarloReport {
            sample_size: n,
            replications: m,
            incidence: None,
            latency: None,
            bootstrap: None,
        }
    }
}

/// Run `f(r)` for every replication and fold the results in order.
fn fold_replications<E, T, F, G>(exec: &E, m: usize, f: F, mut g: G)
where
    E: Executor,
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    G: FnMut(T),
{
    let mut start = 0;
    while start < m {
        let len = BLOCK.min(m - start);
        for item in exec.map(len, |k| f(start + k)) {
            g(item);
        }
        start += len;
    }
}

fn incidence_cells(plan: &ExperimentPlan, sample: &SurvivalSample, truth: &[f64], grid: &[f64]) -> Vec<Option<f64>> {
    let mut cells = Vec::with_capacity(plan.covariates.len() * grid.len());
    for (xi, &x) in plan.covariates.iter().enumerate() {
        for &h in grid {
            let est = match plan.estimator {
                Estimator::Kernel => incidence(sample, x, h, plan.kernel).ok(),
                Estimator::Truth => Some(truth[xi]),
            };
            cells.push(est.map(|p| (p - truth[xi]) * (p - truth[xi])));
        }
    }
    cells
}

fn incidence_table(plan: &ExperimentPlan, n: usize, grid: &[f64], exec: &impl Executor) -> ErrorTable {
    let truth: Vec<f64> = plan.covariates.iter().map(|&x| plan.model.cure_probability(x)).collect();
    let mut table = ErrorTable::new(&plan.covariates, grid);
    fold_replications(
        exec,
        plan.replications,
        |r| incidence_cells(plan, &plan.sample(n, r), &truth, grid),
        |cells| table.add(&cells),
    );
    table
}

/// Monte Carlo MSE of the incidence on the plan's covariate and
/// bandwidth grids, one report per sample size.
pub fn mc_incidence_mse(plan: &ExperimentPlan, exec: &impl Executor) -> Result<Vec<MonteCarloReport>> {
    plan.validate()?;
    Ok(plan
        .sample_sizes
        .iter()
        .map(|&n| {
            let mut rep = MonteCarloReport::empty(n, plan.replications);
            rep.incidence = Some(incidence_table(plan, n, plan.incidence_grid.values(), exec));
            rep
        })
        .collect())
}

fn trapezoid(ts: &[f64], ys: &[f64]) -> f64 {
    ts.windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

/// Monte Carlo MISE of the latency over `[0, effective τ0]`.
pub fn mc_latency_mise(plan: &ExperimentPlan, exec: &impl Executor) -> Result<Vec<MonteCarloReport>> {
    plan.validate()?;
    let ts = plan.time_grid();
    let truth: Vec<Vec<f64>> = plan
        .covariates
        .iter()
        .map(|&x| ts.iter().map(|&t| plan.model.latency(x, t)).collect())
        .collect();
    let grid = plan.latency_grid.values();
    Ok(plan
        .sample_sizes
        .iter()
        .map(|&n| {
            let mut table = ErrorTable::new(&plan.covariates, grid);
            fold_replications(
                exec,
                plan.replications,
                |r| {
                    let sample = plan.sample(n, r);
                    let mut cells = Vec::with_capacity(plan.covariates.len() * grid.len());
                    let mut sq = alloc::vec![0.0; ts.len()];
                    for (xi, &x) in plan.covariates.iter().enumerate() {
                        for &b in grid {
                            let cell = match plan.estimator {
                                Estimator::Truth => Some(0.0),
                                Estimator::Kernel => latency_curve(&sample, x, b, plan.kernel).ok().map(|curve| {
                                    for ((s, &t), &s0) in sq.iter_mut().zip(&ts).zip(&truth[xi]) {
                                        let d = curve.eval(t) - s0;
                                        *s = d * d;
                                    }
                                    trapezoid(&ts, &sq)
                                }),
                            };
                            cells.push(cell);
                        }
                    }
                    cells
                },
                |cells| table.add(&cells),
            );
            let mut rep = MonteCarloReport::empty(n, plan.replications);
            rep.latency = Some(table);
            rep
        })
        .collect())
}

/// Bootstrap bandwidth selection on every replication and covariate
/// value, summarized against the Monte Carlo MSE on the incidence grid.
pub fn mc_bootstrap_bandwidth_study(
    plan: &ExperimentPlan,
    config: &BootstrapConfig,
    exec: &impl Executor,
) -> Result<Vec<MonteCarloReport>> {
    plan.validate()?;
    config.validate()?;
    let truth: Vec<f64> = plan.covariates.iter().map(|&x| plan.model.cure_probability(x)).collect();
    let mut reports = Vec::new();
    for &n in &plan.sample_sizes {
        let table = incidence_table(plan, n, plan.incidence_grid.values(), exec);
        let stream = Substream::root(config.master_seed).child(tag::SELECTOR).child(n as u64);
        let nx = plan.covariates.len();
        let mut selections: Vec<Vec<Option<f64>>> = alloc::vec![Vec::with_capacity(plan.replications); nx];
        let mut boundary = alloc::vec![0usize; nx];
        fold_replications(
            exec,
            plan.replications,
            |r| {
                let sample = plan.sample(n, r);
                let rs = stream.child(r as u64);
                plan.covariates
                    .iter()
                    .enumerate()
                    .map(|(xi, &x)| {
                        select_bandwidth_with(&sample, x, config, rs.child(xi as u64))
                            .ok()
                            .map(|s| (s.selected, s.boundary))
                    })
                    .collect::<Vec<_>>()
            },
            |row| {
                for (xi, s) in row.into_iter().enumerate() {
                    selections[xi].push(s.map(|v| v.0));
                    boundary[xi] += s.map_or(0, |v| v.1 as usize);
                }
            },
        );

        let mut percentiles: Vec<[f64; 3]> = Vec::with_capacity(nx);
        for sel in &selections {
            let ok: Vec<f64> = sel.iter().flatten().copied().collect();
            if ok.is_empty() {
                return Err(Error::InvalidInput("bandwidth selection failed in every replication"));
            }
            percentiles.push([quantile(&ok, 0.25), quantile(&ok, 0.5), quantile(&ok, 0.75)]);
        }
        let mut sums = alloc::vec![[0.0f64; 3]; nx];
        let mut counts = alloc::vec![[0usize; 3]; nx];
        fold_replications(
            exec,
            plan.replications,
            |r| {
                let sample = plan.sample(n, r);
                plan.covariates
                    .iter()
                    .enumerate()
                    .map(|(xi, &x)| {
                        percentiles[xi].map(|h| match plan.estimator {
                            Estimator::Truth => Some(0.0),
                            Estimator::Kernel => incidence(&sample, x, h, plan.kernel)
                                .ok()
                                .map(|p| (p - truth[xi]) * (p - truth[xi])),
                        })
                    })
                    .collect::<Vec<_>>()
            },
            |row| {
                for (xi, cells) in row.into_iter().enumerate() {
                    for k in 0..3 {
                        if let Some(v) = cells[k] {
                            sums[xi][k] += v;
                            counts[xi][k] += 1;
                        }
                    }
                }
            },
        );

        let mut summaries = Vec::with_capacity(nx);
        for xi in 0..nx {
            let oracle = table
                .argmin(xi)
                .ok_or(Error::InvalidInput("no feasible bandwidth on the incidence grid"))?;
            let mut pm = [f64::NAN; 3];
            for k in 0..3 {
                if counts[xi][k] > 0 {
                    pm[k] = sums[xi][k] / counts[xi][k] as f64;
                }
            }
            summaries.push(BootstrapSummary {
                x: plan.covariates[xi],
                selections: core::mem::take(&mut selections[xi]),
                boundary_hits: boundary[xi],
                percentiles: percentiles[xi],
                percentile_mse: pm,
                oracle_bandwidth: table.bandwidths[oracle],
                oracle_mse: table.value(xi, oracle).unwrap(),
            });
        }
        let mut rep = MonteCarloReport::empty(n, plan.replications);
        rep.incidence = Some(table);
        rep.bootstrap = Some(summaries);
        reports.push(rep);
    }
    Ok(reports)
}
