//! Bootstrap bandwidth selection for the incidence estimator.
//!
//! For a target covariate value `x`, resamples keep every covariate and
//! redraw `(T*, δ*)` from the kernel-weighted empirical law at that
//! covariate with a pilot bandwidth `g`. The bootstrap MSE of the cure
//! probability at bandwidth `h` is the Monte Carlo mean of
//! `(p̂*_h(x) - p̂_g(x))²`, and the selected bandwidth minimizes it over a
//! sequence of nested log-scale grids.
//!
//! Grid refinement: after a search over a grid with adjacent ratio `ρ`,
//! the next grid is log-equispaced on `[h_best / ρ, h_best · ρ]`.
//! Within a stage every bandwidth is scored on the same resamples.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::beran::{Observation, SurvivalSample};
use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, KernelSpec};
use crate::math::{ln, log_space, powf, round};
use crate::rng::{tag, uniform, Substream};

/// Increasing positive bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid {
    values: Vec<f64>,
    log_spaced: bool,
}

impl BandwidthGrid {
    pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidInput("grid range must be positive and increasing"));
        }
        if points < 2 {
            return Err(Error::InvalidInput("grid needs at least two points"));
        }
        Ok(BandwidthGrid {
            values: log_space(lo, hi, points),
            log_spaced: true,
        })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty bandwidth grid"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("bandwidths must be positive and finite"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("bandwidths must be strictly increasing"));
        }
        Ok(BandwidthGrid {
            values,
            log_spaced: false,
        })
    }

    /// Log grid of `points` values on `[center / ratio, center · ratio]`.
    pub fn centered(center: f64, ratio: f64, points: usize) -> Result<Self> {
        Self::log_spaced(center / ratio, center * ratio, points)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_log_spaced(&self) -> bool {
        self.log_spaced
    }

    /// Geometric mean ratio between adjacent values.
    pub fn adjacent_ratio(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 1.0;
        }
        crate::math::exp((ln(self.values[n - 1]) - ln(self.values[0])) / (n - 1) as f64)
    }
}

/// Rule producing the pilot bandwidth `g_x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PilotRule {
    /// `(X_(n) - X_(1)) / 10^{7/9} · n^{-1/9}`, the same for every `x`.
    #[default]
    Global,
    /// Mean distance to the `k`-th nearest covariate on each side, times
    /// `(100/n)^{1/9}`. `k = None` uses `round(n / 4)`.
    LocalKnn { k: Option<usize> },
}

impl PilotRule {
    pub fn bandwidth(&self, sample: &SurvivalSample, x: f64) -> Result<f64> {
        match *self {
            PilotRule::Global => pilot_global(sample),
            PilotRule::LocalKnn { k } => {
                let k = k.unwrap_or_else(|| default_knn(sample.len()));
                pilot_local(sample, x, k)
            }
        }
    }
}

pub fn default_knn(n: usize) -> usize {
    (round(n as f64 / 4.0) as usize).max(1)
}

pub fn pilot_global(sample: &SurvivalSample) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidInput("pilot bandwidth needs at least two observations"));
    }
    let (lo, hi) = sample.covariate_range();
    let range = hi - lo;
    if range <= 0.0 {
        return Err(Error::DegenerateCovariate);
    }
    Ok(global_pilot_formula(range, n))
}

/// `range / 10^{7/9} · n^{-1/9}`.
pub fn global_pilot_formula(range: f64, n: usize) -> f64 {
    range / powf(10.0, 7.0 / 9.0) * powf(n as f64, -1.0 / 9.0)
}

pub fn pilot_local(sample: &SurvivalSample, x: f64, k: usize) -> Result<f64> {
    let n = sample.len();
    if n < 2 || k == 0 {
        return Err(Error::InvalidInput("local pilot needs n >= 2 and k >= 1"));
    }
    let mut right: Vec<f64> = Vec::new();
    let mut left: Vec<f64> = Vec::new();
    for &xi in sample.sorted_covariates() {
        if xi > x {
            right.push(xi - x);
        } else if xi < x {
            left.push(x - xi);
        }
    }
    let kth = |v: &mut Vec<f64>| -> Option<f64> {
        if v.len() < k {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(v[k - 1])
    };
    let (dp, dm) = match (kth(&mut right), kth(&mut left)) {
        (Some(p), Some(m)) => (p, m),
        (Some(p), None) => (p, p),
        (None, Some(m)) => (m, m),
        (None, None) => return Err(Error::DegenerateCovariate),
    };
    Ok(0.5 * (dp + dm) * powf(100.0, 1.0 / 9.0) * powf(n as f64, -1.0 / 9.0))
}

/// Precomputed weighted empirical laws `F̂_g(·,·|X_i)` for every
/// covariate in a sample.
#[derive(Debug, Clone)]
pub struct ResamplingLaw {
    /// Observations ordered by covariate.
    by_x: Vec<Observation>,
    /// For each observation (input order): covariate-ordered neighbour
    /// range start and cumulative kernel masses over the range.
    neighbourhoods: Vec<(usize, Vec<f64>)>,
}

impl ResamplingLaw {
    pub fn new(sample: &SurvivalSample, g: f64, spec: KernelSpec) -> Result<Self> {
        check_bandwidth(g)?;
        let mut by_x: Vec<Observation> = sample
            .sorted_view()
            .iter()
            .map(|&i| sample.observations()[i])
            .collect();
        // Stable sort keeps canonical order among equal covariates.
        by_x.sort_by(|a, b| a.x.total_cmp(&b.x));
        let xs: Vec<f64> = by_x.iter().map(|o| o.x).collect();
        let mut neighbourhoods = Vec::with_capacity(sample.len());
        for o in sample.observations() {
            let lo = xs.partition_point(|&v| v <= o.x - g);
            let hi = xs.partition_point(|&v| v < o.x + g);
            let mut acc = 0.0;
            let cum: Vec<f64> = xs[lo..hi]
                .iter()
                .map(|&v| {
                    acc += spec.eval((o.x - v) / g);
                    acc
                })
                .collect();
            if acc <= 0.0 {
                return Err(Error::EmptyNeighborhood { x: o.x, h: g });
            }
            neighbourhoods.push((lo, cum));
        }
        Ok(ResamplingLaw { by_x, neighbourhoods })
    }

    /// Draw one resample: covariates unchanged, `(T*, δ*)` redrawn.
    pub fn draw<R: RngCore + ?Sized>(&self, sample: &SurvivalSample, rng: &mut R) -> SurvivalSample {
        let obs: Vec<Observation> = sample
            .observations()
            .iter()
            .zip(&self.neighbourhoods)
            .map(|(o, (start, cum))| {
                let total = *cum.last().unwrap();
                let target = uniform(rng) * total;
                let k = cum.partition_point(|&c| c <= target).min(cum.len() - 1);
                let src = &self.by_x[start + k];
                Observation::new(o.x, src.t, src.delta)
            })
            .collect();
        SurvivalSample::new(obs).expect("resample of a valid sample is valid")
    }
}

/// One weighted-bootstrap resample with pilot bandwidth `g`.
pub fn bootstrap_resample<R: RngCore + ?Sized>(
    sample: &SurvivalSample,
    g: f64,
    spec: KernelSpec,
    rng: &mut R,
) -> Result<SurvivalSample> {
    Ok(ResamplingLaw::new(sample, g, spec)?.draw(sample, rng))
}

fn has_neighbours(sample: &SurvivalSample, x: f64, h: f64) -> bool {
    sample.sorted_covariates().iter().any(|&xi| (x - xi).abs() < h)
}

/// Monte Carlo bootstrap MSE of the cure probability at `(x, h)` with
/// pilot bandwidth `g` and `resamples` draws from substreams of `seed`.
pub fn bootstrap_mse(
    sample: &SurvivalSample,
    x: f64,
    h: f64,
    g: f64,
    resamples: usize,
    seed: u64,
    spec: KernelSpec,
) -> Result<f64> {
    if resamples == 0 {
        return Err(Error::InvalidInput("at least one bootstrap resample required"));
    }
    check_bandwidth(h)?;
    if !has_neighbours(sample, x, h) {
        return Err(Error::EmptyNeighborhood { x, h });
    }
    let target = sample.cure_product(x, g, spec)?;
    let law = ResamplingLaw::new(sample, g, spec)?;
    let root = Substream::root(seed).child(tag::BOOTSTRAP);
    let mut total = 0.0;
    for b in 0..resamples {
        let mut rng = root.child(b as u64).rng();
        let r = law.draw(sample, &mut rng);
        let d = r.cure_product(x, h, spec)? - target;
        total += d * d;
    }
    Ok(total / resamples as f64)
}

/// Resample count and grid size for one stage of the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSpec {
    pub resamples: usize,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    /// Each stage runs two searches; the first stage's first search spans
    /// `range`, every later search is centred on the running minimizer.
    pub stages: Vec<StageSpec>,
    pub range: (f64, f64),
    pub pilot: PilotRule,
    pub kernel: KernelSpec,
    pub master_seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self::simulation(0)
    }
}

impl BootstrapConfig {
    /// Two stages (80 resamples on 21 points, then 1000 on 5) over
    /// `[0.2, 50]` with the global pilot.
    pub fn simulation(master_seed: u64) -> Self {
        BootstrapConfig {
            stages: alloc::vec![
                StageSpec { resamples: 80, grid_size: 21 },
                StageSpec { resamples: 1000, grid_size: 5 },
            ],
            range: (0.2, 50.0),
            pilot: PilotRule::Global,
            kernel: KernelSpec::Epanechnikov,
            master_seed,
        }
    }

    /// One stage of 1000 resamples on 21 points over `[0.2, covariate range]`
    /// with the local k-NN pilot.
    pub fn data(covariate_range: f64, master_seed: u64) -> Self {
        BootstrapConfig {
            stages: alloc::vec![StageSpec { resamples: 1000, grid_size: 21 }],
            range: (0.2, covariate_range),
            pilot: PilotRule::LocalKnn { k: None },
            kernel: KernelSpec::Epanechnikov,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidInput("at least one search stage required"));
        }
        for s in &self.stages {
            if s.resamples == 0 {
                return Err(Error::InvalidInput("resample counts must be >= 1"));
            }
            if s.grid_size < 2 {
                return Err(Error::InvalidInput("grid sizes must be >= 2"));
            }
        }
        let (lo, hi) = self.range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidInput("search range must be positive and increasing"));
        }
        Ok(())
    }
}

/// One grid search within a stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    pub stage: usize,
    pub resamples: usize,
    pub grid: Vec<f64>,
    /// `None` where the bandwidth leaves `x` without neighbours.
    pub mse: Vec<Option<f64>>,
    pub argmin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSearch {
    pub center: f64,
    pub selected: f64,
    pub pilot: f64,
    /// Cure probability at `x` with the pilot bandwidth (the bootstrap target).
    pub pilot_estimate: f64,
    pub searches: Vec<SearchRecord>,
    /// Minimizer sits at an end of the final grid.
    pub boundary: bool,
    /// Minimizer of the first, full-range search sits at an end of the range.
    pub range_boundary: bool,
    /// Every bandwidth of a stage was scored on the same resamples.
    pub common_random_numbers: bool,
}

impl BandwidthSearch {
    pub fn final_search(&self) -> &SearchRecord {
        self.searches.last().expect("at least one search")
    }
}

pub fn select_bandwidth(sample: &SurvivalSample, x: f64, config: &BootstrapConfig) -> Result<BandwidthSearch> {
    select_bandwidth_with(sample, x, config, Substream::root(config.master_seed).child(tag::SELECTOR))
}

/// Bandwidth search drawing all resamples from `stream`; stage `s`,
/// resample `b` uses `stream.child(s).child(b)`.
pub fn select_bandwidth_with(
    sample: &SurvivalSample,
    x: f64,
    config: &BootstrapConfig,
    stream: Substream,
) -> Result<BandwidthSearch> {
    config.validate()?;
    let spec = config.kernel;
    let g = config.pilot.bandwidth(sample, x)?;
    let target = sample.cure_product(x, g, spec)?;
    let law = ResamplingLaw::new(sample, g, spec)?;

    let first = &config.stages[0];
    let mut grid = BandwidthGrid::log_spaced(config.range.0, config.range.1, first.grid_size)?;
    let mut searches: Vec<SearchRecord> = Vec::new();
    let mut best = 0.0;

    for (si, stage) in config.stages.iter().enumerate() {
        let stage_stream = stream.child(si as u64);
        let resamples: Vec<SurvivalSample> = (0..stage.resamples)
            .map(|b| {
                let mut rng = stage_stream.child(b as u64).rng();
                law.draw(sample, &mut rng)
            })
            .collect();
        for search in 0..2 {
            if si > 0 || search > 0 {
                grid = BandwidthGrid::centered(best, grid.adjacent_ratio(), stage.grid_size)?;
            }
            let mse: Vec<Option<f64>> = grid
                .values()
                .iter()
                .map(|&h| {
                    if !has_neighbours(sample, x, h) {
                        return None;
                    }
                    let total: f64 = resamples
                        .iter()
                        .map(|r| {
                            let d = r.cure_product(x, h, spec).expect("neighbourhood checked") - target;
                            d * d
                        })
                        .sum();
                    Some(total / stage.resamples as f64)
                })
                .collect();
            let argmin = mse
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| (i, v)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i)
                .ok_or(Error::EmptyNeighborhood { x, h: *grid.values().last().unwrap() })?;
            best = grid.values()[argmin];
            searches.push(SearchRecord {
                stage: si,
                resamples: stage.resamples,
                grid: grid.values().to_vec(),
                mse,
                argmin,
            });
        }
    }

    let last = searches.last().unwrap();
    let boundary = last.argmin == 0 || last.argmin + 1 == last.grid.len();
    let first_search = &searches[0];
    let range_boundary = first_search.argmin == 0 || first_search.argmin + 1 == first_search.grid.len();
    Ok(BandwidthSearch {
        center: x,
        selected: best,
        pilot: g,
        pilot_estimate: target,
        searches,
        boundary,
        range_boundary,
        common_random_numbers: true,
    })
}

/// Moving-average smoothing of bandwidths selected on an equispaced
/// covariate grid `x_0 < … < x_m`: window `[l-5, l+5]` truncated to the
/// grid, divided by the number of points it holds.
pub fn smooth_bandwidths(hs: &[f64]) -> Result<Vec<f64>> {
    if hs.len() < 11 {
        return Err(Error::GridTooSmall { points: hs.len() });
    }
    if hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::InvalidInput("bandwidths must be positive and finite"));
    }
    let m = hs.len() - 1;
    Ok((0..=m)
        .map(|l| {
            let lo = l.saturating_sub(5);
            let hi = (l + 5).min(m);
            hs[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gen_sample;
    use crate::truth::ModelTruth;
    use proptest::prelude::*;

    const K: KernelSpec = KernelSpec::Epanechnikov;

    fn uniform_design(n: usize, seed: u64) -> SurvivalSample {
        gen_sample(&ModelTruth::model1(), n, Substream::root(seed))
    }

    #[test]
    fn global_pilot_reference_values() {
        // Range 40: g = 40 / 10^{7/9} n^{-1/9}.
        let expect = |n: f64| 40.0 / powf(10.0, 7.0 / 9.0) * powf(n, -1.0 / 9.0);
        assert!((expect(100.0) - 4.0).abs() < 1e-12);
        assert!((expect(50.0) - 4.32).abs() < 5e-3);
        assert!((expect(200.0) - 3.70).abs() < 5e-3);
        let s = uniform_design(100, 3);
        let (lo, hi) = s.covariate_range();
        assert!((pilot_global(&s).unwrap() - (hi - lo) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn global_pilot_unit_range_formula() {
        let s = SurvivalSample::from_triples(&[(0.0, 1.0, true), (1.0, 1.0, false)]).unwrap();
        let g = pilot_global(&s).unwrap();
        assert!((g - powf(10.0, -7.0 / 9.0) * powf(2.0, -1.0 / 9.0)).abs() < 1e-15);
        let flat = SurvivalSample::from_triples(&[(1.0, 1.0, true), (1.0, 2.0, false)]).unwrap();
        assert_eq!(pilot_global(&flat), Err(Error::DegenerateCovariate));
    }

    #[test]
    fn global_pilot_formula_at_a_billion() {
        let g = global_pilot_formula(1.0, 1_000_000_000);
        assert!((g - powf(10.0, -7.0 / 9.0) * 0.1).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_mse_is_an_order_free_average() {
        let s = uniform_design(80, 12);
        let (x, h, g, b, seed) = (1.0, 5.0, 4.0, 50, 31);
        let law = ResamplingLaw::new(&s, g, K).unwrap();
        let target = s.cure_product(x, g, K).unwrap();
        let root = Substream::root(seed).child(tag::BOOTSTRAP);
        let mut devs: Vec<f64> = (0..b)
            .map(|k| {
                let r = law.draw(&s, &mut root.child(k as u64).rng());
                (r.cure_product(x, h, K).unwrap() - target).powi(2)
            })
            .collect();
        let direct = bootstrap_mse(&s, x, h, g, b, seed, K).unwrap();
        devs.reverse();
        let reversed = devs.iter().sum::<f64>() / b as f64;
        assert!((direct - reversed).abs() <= 1e-15 * direct);
    }

    #[test]
    fn local_pilot_symmetric_and_one_sided() {
        // x = 0 with covariates ±1..±10: d_k = k on both sides.
        let mut t = Vec::new();
        for i in 1..=10 {
            t.push((i as f64, 1.0, true));
            t.push((-(i as f64), 1.0, false));
        }
        let s = SurvivalSample::from_triples(&t).unwrap();
        let g = pilot_local(&s, 0.0, 3).unwrap();
        assert!((g - 3.0 * powf(100.0 / 20.0, 1.0 / 9.0)).abs() < 1e-12);
        // Left of the data: only right neighbours exist.
        let g = pilot_local(&s, -20.0, 3).unwrap();
        assert!((g - 12.0 * powf(100.0 / 20.0, 1.0 / 9.0)).abs() < 1e-12);
        assert_eq!(pilot_local(&s, 0.0, 11), Err(Error::DegenerateCovariate));
    }

    #[test]
    fn local_pilot_n100_is_mean_knn_distance() {
        let s = uniform_design(100, 9);
        let x = 1.3;
        let mut r: Vec<f64> = s.sorted_covariates().iter().filter(|&&v| v > x).map(|v| v - x).collect();
        let mut l: Vec<f64> = s.sorted_covariates().iter().filter(|&&v| v < x).map(|v| x - v).collect();
        r.sort_by(f64::total_cmp);
        l.sort_by(f64::total_cmp);
        let expect = 0.5 * (r[24] + l[24]);
        let g = PilotRule::LocalKnn { k: None }.bandwidth(&s, x).unwrap();
        assert!((g - expect).abs() < 1e-12);
    }

    #[test]
    fn resample_keeps_covariates_and_uses_observed_pairs() {
        let s = uniform_design(60, 4);
        let mut rng = Substream::root(5).rng();
        let r = bootstrap_resample(&s, 4.0, K, &mut rng).unwrap();
        assert_eq!(r.len(), s.len());
        for (a, b) in s.observations().iter().zip(r.observations()) {
            assert_eq!(a.x, b.x);
            assert!(s.observations().iter().any(|o| o.t == b.t && o.delta == b.delta));
        }
    }

    #[test]
    fn resample_atom_frequencies_match_weights() {
        let s = SurvivalSample::from_triples(&[
            (0.0, 1.0, true),
            (0.5, 2.0, false),
            (1.0, 3.0, true),
            (1.2, 4.0, false),
            (5.0, 6.0, true),
        ])
        .unwrap();
        let g = 1.5;
        let law = ResamplingLaw::new(&s, g, K).unwrap();
        let draws = 100_000;
        // Track the pair drawn for the first observation (covariate 0).
        let mut counts = [0usize; 5];
        let root = Substream::root(77);
        for b in 0..draws {
            let r = law.draw(&s, &mut root.child(b).rng());
            let o = r.observations()[0];
            let j = s.observations().iter().position(|p| p.t == o.t).unwrap();
            counts[j] += 1;
        }
        let w = crate::kernel::nw_weights(&[0.0, 0.5, 1.0, 1.2, 5.0], 0.0, g, K).unwrap();
        for j in 0..5 {
            let p = w.weights[j];
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            let f = counts[j] as f64 / draws as f64;
            assert!((f - p).abs() <= 3.0 * se + 1e-12, "atom {j}: {f} vs {p}");
        }
    }

    #[test]
    fn huge_pilot_draws_uniformly() {
        let s = SurvivalSample::from_triples(&[(0.0, 1.0, true), (3.0, 2.0, false), (9.0, 3.0, true)]).unwrap();
        let law = ResamplingLaw::new(&s, 1e9, K).unwrap();
        for (_, cum) in &law.neighbourhoods {
            assert_eq!(cum.len(), 3);
            assert!((cum[0] / cum[2] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_mse_zero_for_degenerate_law() {
        // All covariates identical and all pairs identical: every resample
        // equals the original and the deviation vanishes.
        let s = SurvivalSample::from_triples(&[(0.0, 1.0, true), (0.0, 1.0, true), (0.0, 1.0, true)]).unwrap();
        assert_eq!(bootstrap_mse(&s, 0.0, 2.0, 2.0, 1, 9, K).unwrap(), 0.0);
    }

    #[test]
    fn bootstrap_mse_errors() {
        let s = uniform_design(40, 1);
        assert!(bootstrap_mse(&s, 0.0, 2.0, 4.0, 0, 1, K).is_err());
        assert!(matches!(bootstrap_mse(&s, 100.0, 2.0, 4.0, 5, 1, K), Err(Error::EmptyNeighborhood { .. })));
    }

    #[test]
    fn bootstrap_mse_converges_with_more_resamples() {
        let s = uniform_design(100, 21);
        let g = pilot_global(&s).unwrap();
        let reference = bootstrap_mse(&s, 0.0, 6.0, g, 10_000, 1234, K).unwrap();
        let small = bootstrap_mse(&s, 0.0, 6.0, g, 100, 99, K).unwrap();
        let large = bootstrap_mse(&s, 0.0, 6.0, g, 400, 99, K).unwrap();
        assert!(reference > 0.0);
        // Relative Monte Carlo error of a mean of squares: roughly sqrt(2/B).
        assert!((small / reference - 1.0).abs() < 5.0 * (2.0f64 / 100.0).sqrt());
        assert!((large / reference - 1.0).abs() < 5.0 * (2.0f64 / 400.0).sqrt());
    }

    #[test]
    fn selection_is_deterministic_and_in_final_grid() {
        let s = uniform_design(80, 8);
        let mut cfg = BootstrapConfig::simulation(17);
        cfg.stages[1].resamples = 100;
        let a = select_bandwidth(&s, 0.0, &cfg).unwrap();
        let b = select_bandwidth(&s, 0.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.searches.len(), 4);
        let last = a.final_search();
        assert!(last.grid.contains(&a.selected));
        assert_eq!(last.grid[last.argmin], a.selected);
        assert_eq!(last.grid.len(), 5);
        assert_eq!(a.searches[0].grid.len(), 21);
        assert_eq!(a.searches[0].grid[0], 0.2);
        assert_eq!(a.searches[0].grid[20], 50.0);
        assert_eq!(a.boundary, last.argmin == 0 || last.argmin == 4);
        for rec in &a.searches {
            for v in rec.mse.iter().flatten() {
                assert!(v.is_finite() && *v >= 0.0);
            }
            // Each refined grid brackets the previous minimizer.
        }
        for w in a.searches.windows(2) {
            let prev = w[0].grid[w[0].argmin];
            assert!(w[1].grid[0] <= prev && prev <= *w[1].grid.last().unwrap());
        }
        let other = select_bandwidth(&s, 0.0, &BootstrapConfig { master_seed: 18, ..cfg.clone() }).unwrap();
        assert_ne!(other.searches[0].mse, a.searches[0].mse);
    }

    #[test]
    fn tiny_bandwidths_are_marked_infeasible() {
        let s = SurvivalSample::from_triples(&[(-10.0, 1.0, true), (-2.0, 2.0, false), (10.0, 3.0, true), (2.5, 0.5, false)]).unwrap();
        let cfg = BootstrapConfig {
            stages: alloc::vec![StageSpec { resamples: 5, grid_size: 21 }],
            range: (0.2, 50.0),
            pilot: PilotRule::Global,
            kernel: K,
            master_seed: 1,
        };
        let r = select_bandwidth(&s, 0.0, &cfg).unwrap();
        assert!(r.searches[0].mse[0].is_none());
        assert!(r.selected > 2.0);
        assert!(r.searches[0].mse.iter().any(|v| v.is_some()));
    }

    #[test]
    fn smoothing_golden_small() {
        let hs: Vec<f64> = (0..=10).map(|i| i as f64 + 1.0).collect();
        let s = smooth_bandwidths(&hs).unwrap();
        assert!((s[0] - (1.0 + 2.0 + 3.0 + 4.0 + 5.0 + 6.0) / 6.0).abs() < 1e-15);
        assert!((s[5] - 66.0 / 11.0).abs() < 1e-15);
        assert!((s[10] - (6.0 + 7.0 + 8.0 + 9.0 + 10.0 + 11.0) / 6.0).abs() < 1e-15);
        assert_eq!(smooth_bandwidths(&hs[..10]), Err(Error::GridTooSmall { points: 10 }));
    }

    proptest! {
        #[test]
        fn smoothing_constant_and_shift(c in 0.1f64..10.0, shift in 0.0f64..5.0, hs in prop::collection::vec(0.1f64..20.0, 11..40)) {
            let flat = alloc::vec![c; hs.len()];
            for v in smooth_bandwidths(&flat).unwrap() {
                prop_assert!((v - c).abs() < 1e-12);
            }
            let base = smooth_bandwidths(&hs).unwrap();
            let moved: Vec<f64> = hs.iter().map(|h| h + shift).collect();
            let shifted = smooth_bandwidths(&moved).unwrap();
            for (a, b) in base.iter().zip(&shifted) {
                prop_assert!((b - a - shift).abs() < 1e-9);
            }
        }

        #[test]
        fn global_pilot_scaling(n in 2usize..5000) {
            // Same range, doubled n: g scales by 2^{-1/9}.
            let mk = |n: usize| {
                let t: Vec<(f64, f64, bool)> = (0..n).map(|i| (if i == 0 { -20.0 } else if i == 1 { 20.0 } else { 0.0 }, 1.0, true)).collect();
                SurvivalSample::from_triples(&t).unwrap()
            };
            let a = pilot_global(&mk(n)).unwrap();
            let b = pilot_global(&mk(2 * n)).unwrap();
            prop_assert!((b / a - powf(2.0, -1.0 / 9.0)).abs() < 1e-12);
        }
    }
}
