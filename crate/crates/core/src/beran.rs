//! Beran (conditional Kaplan–Meier) estimation.
//!
//! Observations are kept in a canonical order: time ascending, uncensored
//! before censored at equal times, then covariate ascending. All sums run in
//! that order, so permuting the input never changes an output bit.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, KernelSpec};

/// One right-censored observation. `delta` is true when the event was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub x: f64,
    pub t: f64,
    pub delta: bool,
}

impl Observation {
    pub fn new(x: f64, t: f64, delta: bool) -> Self {
        Observation { x, t, delta }
    }
}

fn canonical(a: &Observation, b: &Observation) -> Ordering {
    a.t.total_cmp(&b.t)
        .then_with(|| b.delta.cmp(&a.delta))
        .then_with(|| a.x.total_cmp(&b.x))
}

/// An immutable sample with its canonical sorted view.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSample {
    observations: Vec<Observation>,
    order: Vec<usize>,
    xs: Vec<f64>,
    ts: Vec<f64>,
    deltas: Vec<bool>,
    t1max: Option<f64>,
}

impl SurvivalSample {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidInput("sample has no observations"));
        }
        for o in &observations {
            if !o.x.is_finite() {
                return Err(Error::InvalidInput("covariate must be finite"));
            }
            if !(o.t.is_finite() && o.t >= 0.0) {
                return Err(Error::InvalidInput("time must be finite and non-negative"));
            }
        }
        let mut order: Vec<usize> = (0..observations.len()).collect();
        order.sort_by(|&i, &j| canonical(&observations[i], &observations[j]));
        let xs = order.iter().map(|&i| observations[i].x).collect();
        let ts = order.iter().map(|&i| observations[i].t).collect();
        let deltas: Vec<bool> = order.iter().map(|&i| observations[i].delta).collect();
        let t1max = observations
            .iter()
            .filter(|o| o.delta)
            .map(|o| o.t)
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))));
        Ok(SurvivalSample {
            observations,
            order,
            xs,
            ts,
            deltas,
            t1max,
        })
    }

    pub fn from_triples(triples: &[(f64, f64, bool)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(x, t, d)| Observation::new(x, t, d))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Observations in input order.
    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Permutation of input indices into canonical order.
    pub fn sorted_view(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted_covariates(&self) -> &[f64] {
        &self.xs
    }

    pub fn sorted_times(&self) -> &[f64] {
        &self.ts
    }

    pub fn sorted_status(&self) -> &[bool] {
        &self.deltas
    }

    /// Largest uncensored time, if any event was observed.
    pub fn largest_uncensored_time(&self) -> Option<f64> {
        self.t1max
    }

    pub fn largest_time(&self) -> f64 {
        *self.ts.last().expect("non-empty")
    }

    pub fn covariate_range(&self) -> (f64, f64) {
        self.xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
    }

    /// Normalized kernel weights in canonical order.
    pub(crate) fn sorted_weights(&self, x: f64, h: f64, spec: KernelSpec) -> Result<Vec<f64>> {
        check_bandwidth(h)?;
        let mut w: Vec<f64> = self.xs.iter().map(|&xi| spec.eval((x - xi) / h)).collect();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyNeighborhood { x, h });
        }
        for v in &mut w {
            *v /= total;
        }
        Ok(w)
    }

    /// Per-index hazard factors `δ_i w_i / Σ_{r≥i} w_r` in canonical order;
    /// zero when the remaining weight is zero.
    pub(crate) fn hazard_factors(&self, x: f64, h: f64, spec: KernelSpec) -> Result<Vec<f64>> {
        let w = self.sorted_weights(x, h, spec)?;
        Ok(hazard_factors_from_weights(&w, &self.deltas))
    }

    /// Incidence product `Π(1 - factor_i)` evaluated over the kernel
    /// neighbourhood only. Indices with zero weight contribute an exact
    /// factor of one, so skipping them leaves the result unchanged.
    pub(crate) fn cure_product(&self, x: f64, h: f64, spec: KernelSpec) -> Result<f64> {
        check_bandwidth(h)?;
        let mut local: Vec<(f64, bool)> = Vec::new();
        let mut total = 0.0;
        for (&xi, &d) in self.xs.iter().zip(&self.deltas) {
            let k = spec.eval((x - xi) / h);
            if k > 0.0 {
                total += k;
                local.push((k, d));
            }
        }
        if total <= 0.0 {
            return Err(Error::EmptyNeighborhood { x, h });
        }
        Ok(cure_product_from(&mut local, total))
    }
}

/// `local` holds (raw kernel value, status) in canonical order; values are
/// normalized in place by `total` before the product is formed.
pub(crate) fn cure_product_from(local: &mut [(f64, bool)], total: f64) -> f64 {
    for (w, _) in local.iter_mut() {
        *w /= total;
    }
    // Backward pass stores the tail mass Σ_{r≥i} w_r in place of the raw
    // kernel value; the product then runs forward like `beran_fit`.
    let mut tails = alloc::vec![0.0; local.len()];
    let mut tail = 0.0;
    for (i, &(w, _)) in local.iter().enumerate().rev() {
        tail += w;
        tails[i] = tail;
    }
    let mut prod = 1.0;
    for (&(w, d), &tail) in local.iter().zip(&tails) {
        if d && w > 0.0 && tail > 0.0 {
            prod *= 1.0 - w / tail;
        }
    }
    prod
}

pub(crate) fn hazard_factors_from_weights(w: &[f64], deltas: &[bool]) -> Vec<f64> {
    let n = w.len();
    let mut out = alloc::vec![0.0; n];
    let mut tail = 0.0;
    for i in (0..n).rev() {
        tail += w[i];
        if deltas[i] && w[i] > 0.0 && tail > 0.0 {
            out[i] = w[i] / tail;
        }
    }
    out
}

/// Conditional survival step function at a fixed covariate value.
#[derive(Debug, Clone, PartialEq)]
pub struct BeranCurve {
    pub center: f64,
    pub bandwidth: f64,
    /// Strictly increasing uncensored times carrying positive weight.
    pub jump_times: Vec<f64>,
    /// Survival value just after each jump.
    pub values: Vec<f64>,
}

impl BeranCurve {
    /// Right-continuous evaluation; 1 before the first jump.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Evaluate at increasing `times` in one merge pass.
    pub fn eval_sorted(&self, times: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(times.len());
        let mut k = 0;
        for &t in times {
            while k < self.jump_times.len() && self.jump_times[k] <= t {
                k += 1;
            }
            out.push(if k == 0 { 1.0 } else { self.values[k - 1] });
        }
        out
    }

    pub fn terminal_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(1.0)
    }
}

pub fn beran_fit(sample: &SurvivalSample, x: f64, h: f64, spec: KernelSpec) -> Result<BeranCurve> {
    let factors = sample.hazard_factors(x, h, spec)?;
    let mut jump_times: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut s = 1.0;
    for (i, &f) in factors.iter().enumerate() {
        if f > 0.0 {
            s *= 1.0 - f;
            let t = sample.ts[i];
            if jump_times.last() == Some(&t) {
                *values.last_mut().unwrap() = s;
            } else {
                jump_times.push(t);
                values.push(s);
            }
        }
    }
    Ok(BeranCurve {
        center: x,
        bandwidth: h,
        jump_times,
        values,
    })
}

/// Conditional cumulative hazard `Λ̂_h(t|x)`.
pub fn cumulative_hazard(
    sample: &SurvivalSample,
    x: f64,
    h: f64,
    t: f64,
    spec: KernelSpec,
) -> Result<f64> {
    let factors = sample.hazard_factors(x, h, spec)?;
    Ok(factors
        .iter()
        .zip(&sample.ts)
        .take_while(|(_, &ti)| ti <= t)
        .map(|(f, _)| f)
        .sum())
}

/// `(Ĥ_h(t|x), Ĥ¹_h(t|x))`: weighted empirical law of the observed time and
/// its uncensored sub-distribution.
pub fn subdistribution_estimates(
    sample: &SurvivalSample,
    x: f64,
    h: f64,
    t: f64,
    spec: KernelSpec,
) -> Result<(f64, f64)> {
    let w = sample.sorted_weights(x, h, spec)?;
    let mut hh = 0.0;
    let mut h1 = 0.0;
    for i in 0..w.len() {
        if sample.ts[i] > t {
            break;
        }
        hh += w[i];
        if sample.deltas[i] {
            h1 += w[i];
        }
    }
    Ok((hh, h1))
}

/// Kernel-weighted empirical law of `(T, δ)` given `X = x`, used as the
/// bootstrap resampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLaw {
    /// Atoms in canonical order.
    pub times: Vec<f64>,
    pub status: Vec<bool>,
    pub masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ConditionalLaw {
    pub(crate) fn from_parts(times: Vec<f64>, status: Vec<bool>, masses: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        ConditionalLaw {
            times,
            status,
            masses,
            cumulative,
        }
    }

    /// Index of the atom hit by a uniform draw on [0, 1).
    pub fn atom_for(&self, u: f64) -> usize {
        let total = *self.cumulative.last().expect("non-empty law");
        let target = u * total;
        let k = self.cumulative.partition_point(|&c| c <= target);
        // Skip trailing zero-mass atoms that rounding could select.
        let mut k = k.min(self.masses.len() - 1);
        while self.masses[k] == 0.0 && k > 0 {
            k -= 1;
        }
        k
    }

    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        let k = self.atom_for(crate::rng::uniform(rng));
        (self.times[k], self.status[k])
    }
}

pub fn conditional_empirical(
    sample: &SurvivalSample,
    x: f64,
    g: f64,
    spec: KernelSpec,
) -> Result<ConditionalLaw> {
    let w = sample.sorted_weights(x, g, spec)?;
    Ok(ConditionalLaw::from_parts(
        sample.ts.clone(),
        sample.deltas.clone(),
        w,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Substream;
    use proptest::prelude::*;
    use rand_core::RngCore;

    const K: KernelSpec = KernelSpec::Epanechnikov;
    const HUGE: f64 = 1e9;

    fn toy() -> SurvivalSample {
        SurvivalSample::from_triples(&[(0.0, 1.0, true), (0.0, 2.0, false), (0.0, 3.0, true)]).unwrap()
    }

    /// Plain Kaplan–Meier over distinct event times: S *= 1 - d_j / n_j.
    fn km_oracle(pairs: &[(f64, bool)], t: f64) -> f64 {
        let mut times: Vec<f64> = pairs.iter().filter(|p| p.1).map(|p| p.0).collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let mut s = 1.0;
        for &tj in times.iter().filter(|&&tj| tj <= t) {
            let at_risk = pairs.iter().filter(|p| p.0 >= tj).count() as f64;
            let deaths = pairs.iter().filter(|p| p.1 && p.0 == tj).count() as f64;
            s *= 1.0 - deaths / at_risk;
        }
        s
    }

    #[test]
    fn all_censored_is_flat() {
        let s = SurvivalSample::from_triples(&[(0.0, 1.0, false), (1.0, 2.0, false)]).unwrap();
        let c = beran_fit(&s, 0.5, HUGE, K).unwrap();
        assert!(c.jump_times.is_empty());
        assert_eq!(c.eval(10.0), 1.0);
        assert_eq!(cumulative_hazard(&s, 0.5, HUGE, 10.0, K).unwrap(), 0.0);
        assert_eq!(s.largest_uncensored_time(), None);
    }

    #[test]
    fn toy_curve_by_hand() {
        let c = beran_fit(&toy(), 0.0, HUGE, K).unwrap();
        assert_eq!(c.eval(0.5), 1.0);
        assert!((c.eval(1.0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.eval(2.9) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.eval(3.0), 0.0);
        assert_eq!(c.eval(100.0), 0.0);
        assert_eq!(c.jump_times.len(), c.values.len());
    }

    #[test]
    fn toy_hazard_by_hand() {
        let s = toy();
        assert_eq!(cumulative_hazard(&s, 0.0, HUGE, 0.5, K).unwrap(), 0.0);
        let l = cumulative_hazard(&s, 0.0, HUGE, 3.0, K).unwrap();
        assert!((l - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn subdistributions() {
        let s = toy();
        assert_eq!(subdistribution_estimates(&s, 0.0, HUGE, 0.5, K).unwrap(), (0.0, 0.0));
        let (hh, h1) = subdistribution_estimates(&s, 0.0, HUGE, f64::INFINITY, K).unwrap();
        assert!((hh - 1.0).abs() < 1e-15);
        assert!((h1 - 2.0 / 3.0).abs() < 1e-15);
        let (hh, h1) = subdistribution_estimates(&s, 0.0, HUGE, 2.0, K).unwrap();
        assert!((hh - 2.0 / 3.0).abs() < 1e-15);
        assert!((h1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_put_events_before_censoring() {
        // Event and censoring at t = 2: censored subject stays in the risk set.
        let s = SurvivalSample::from_triples(&[(0.0, 2.0, false), (0.0, 2.0, true), (0.0, 5.0, false)]).unwrap();
        let c = beran_fit(&s, 0.0, HUGE, K).unwrap();
        assert!((c.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.sorted_status(), &[true, false, false]);
    }

    #[test]
    fn conditional_law_matches_weights() {
        let s = SurvivalSample::from_triples(&[(-1.0, 1.0, true), (0.0, 2.0, false), (1.0, 3.0, true), (9.0, 4.0, true)]).unwrap();
        let law = conditional_empirical(&s, 0.0, 1.5, K).unwrap();
        let w = s.sorted_weights(0.0, 1.5, K).unwrap();
        assert_eq!(law.masses, w);
        assert!((law.masses.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(law.masses[3], 0.0);
        let wide = conditional_empirical(&s, 0.0, HUGE, K).unwrap();
        assert!(wide.masses.iter().all(|m| (m - 0.25).abs() < 1e-12));
    }

    #[test]
    fn conditional_law_sampling_frequencies() {
        let s = SurvivalSample::from_triples(&[(-1.0, 1.0, true), (0.0, 2.0, false), (1.0, 3.0, true), (0.5, 4.0, false), (9.0, 5.0, true)]).unwrap();
        let law = conditional_empirical(&s, 0.0, 1.5, K).unwrap();
        let mut rng = Substream::root(11).rng();
        let draws = 1_000_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            let u = crate::rng::uniform(&mut rng);
            counts[law.atom_for(u)] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let p = law.masses[k];
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() <= 3.0 * se + 1e-12, "atom {k}: {freq} vs {p}");
        }
        assert_eq!(counts[4], 0);
    }

    proptest! {
        #[test]
        fn km_reduction(pairs in prop::collection::vec((0u32..15, any::<bool>()), 1..50),
                        xs in prop::collection::vec(-20.0f64..20.0, 50)) {
            // Integer-valued times force plenty of ties.
            let obs: Vec<Observation> = pairs.iter().enumerate()
                .map(|(i, &(t, d))| Observation::new(xs[i], t as f64, d)).collect();
            let s = SurvivalSample::new(obs).unwrap();
            let (lo, hi) = s.covariate_range();
            let h = 1e6 * (hi - lo).max(1.0);
            let c = beran_fit(&s, 0.5 * (lo + hi), h, K).unwrap();
            let tp: Vec<(f64, bool)> = pairs.iter().map(|&(t, d)| (t as f64, d)).collect();
            for t in 0..16 {
                let t = t as f64 + 0.5;
                prop_assert!((c.eval(t) - km_oracle(&tp, t)).abs() < 1e-10);
                prop_assert!((c.eval(t - 0.5) - km_oracle(&tp, t - 0.5)).abs() < 1e-10);
            }
        }

        #[test]
        fn monotone_and_bounded_by_hazard(triples in prop::collection::vec((-20.0f64..20.0, 0.0f64..10.0, any::<bool>()), 1..60),
                                          x in -20.0f64..20.0, h in 1.0f64..40.0) {
            let s = SurvivalSample::from_triples(&triples).unwrap();
            if let Ok(c) = beran_fit(&s, x, h, K) {
                let mut prev = 1.0;
                for (&t, &v) in c.jump_times.iter().zip(&c.values) {
                    prop_assert!(v <= prev && (0.0..=1.0).contains(&v));
                    prev = v;
                    let lam = cumulative_hazard(&s, x, h, t, K).unwrap();
                    prop_assert!(c.eval(t) <= crate::math::exp(-lam) + 1e-12);
                }
                for w in c.jump_times.windows(2) {
                    prop_assert!(w[0] < w[1]);
                }
            }
        }

        #[test]
        fn permutation_invariant(triples in prop::collection::vec((-5i32..5, 0u32..6, any::<bool>()), 2..30),
                                 seed in any::<u64>(), x in -5.0f64..5.0, h in 0.5f64..12.0) {
            let obs: Vec<Observation> = triples.iter().map(|&(x, t, d)| Observation::new(x as f64, t as f64, d)).collect();
            let mut shuffled = obs.clone();
            // Fisher–Yates with the crate's own substream.
            let mut rng = Substream::root(seed).rng();
            for i in (1..shuffled.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                shuffled.swap(i, j);
            }
            let a = SurvivalSample::new(obs).unwrap();
            let b = SurvivalSample::new(shuffled).unwrap();
            let ca = beran_fit(&a, x, h, K);
            let cb = beran_fit(&b, x, h, K);
            prop_assert_eq!(ca, cb);
            prop_assert_eq!(a.cure_product(x, h, K).ok(), b.cure_product(x, h, K).ok());
        }
    }
}
