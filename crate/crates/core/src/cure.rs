//! Incidence and latency estimators for the mixture cure model
//! `S(t|x) = 1 - p(x) + p(x) S0(t|x)`.

use alloc::vec::Vec;

use crate::beran::{beran_fit, BeranCurve, SurvivalSample};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::math::ln;

/// Below this estimated uncured probability the latency is not computed.
pub const CURED_SLICE_TOLERANCE: f64 = 1e-10;

/// Estimated cure probability `1 - p̂_h(x)`, i.e. the Beran curve at the
/// largest uncensored time. Equals 1 when no event was observed.
pub fn incidence(sample: &SurvivalSample, x: f64, h: f64, spec: KernelSpec) -> Result<f64> {
    sample.cure_product(x, h, spec)
}

/// Latency step function `Ŝ0_b(·|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyCurve {
    pub jump_times: Vec<f64>,
    /// Values clipped to [0, 1].
    pub values: Vec<f64>,
    /// Values before clipping.
    pub raw_values: Vec<f64>,
}

impl LatencyCurve {
    fn from_beran(curve: &BeranCurve, cure: f64) -> Self {
        let uncured = 1.0 - cure;
        let raw_values: Vec<f64> = curve.values.iter().map(|s| (s - cure) / uncured).collect();
        LatencyCurve {
            jump_times: curve.jump_times.clone(),
            values: raw_values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            raw_values,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

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

    /// True if any value needed clipping.
    pub fn clipped(&self) -> bool {
        self.values.iter().zip(&self.raw_values).any(|(a, b)| a != b)
    }
}

pub fn latency_curve(sample: &SurvivalSample, x: f64, b: f64, spec: KernelSpec) -> Result<LatencyCurve> {
    let curve = beran_fit(sample, x, b, spec)?;
    let cure = incidence(sample, x, b, spec)?;
    let uncured = 1.0 - cure;
    if uncured < CURED_SLICE_TOLERANCE {
        return Err(Error::CuredSlice { x, b, uncured });
    }
    Ok(LatencyCurve::from_beran(&curve, cure))
}

/// `Ŝ0_b(t|x) = (Ŝ_b(t|x) - (1 - p̂_b(x))) / p̂_b(x)`, clipped to [0, 1].
pub fn latency(sample: &SurvivalSample, x: f64, b: f64, t: f64, spec: KernelSpec) -> Result<f64> {
    Ok(latency_curve(sample, x, b, spec)?.eval(t))
}

/// Incidence and latency at one covariate value.
#[derive(Debug, Clone, PartialEq)]
pub struct CureFit {
    pub center: f64,
    pub incidence_bandwidth: f64,
    pub latency_bandwidth: f64,
    pub cure_probability: f64,
    pub latency: LatencyCurve,
}

pub fn cure_fit(
    sample: &SurvivalSample,
    x: f64,
    h: f64,
    b: f64,
    spec: KernelSpec,
) -> Result<CureFit> {
    Ok(CureFit {
        center: x,
        incidence_bandwidth: h,
        latency_bandwidth: b,
        cure_probability: incidence(sample, x, h, spec)?,
        latency: latency_curve(sample, x, b, spec)?,
    })
}

/// Local hazard jumps `λ̂_i(x) = δ_i B_i / (Σ_{r>i} B_r + δ_i B_i)` in the
/// sample's canonical order. Their running product of `1 - λ̂_i` is the
/// Beran curve.
pub fn hazard_jumps(sample: &SurvivalSample, x: f64, h: f64, spec: KernelSpec) -> Result<Vec<f64>> {
    let w = sample.sorted_weights(x, h, spec)?;
    let d = sample.sorted_status();
    let n = w.len();
    let mut out = alloc::vec![0.0; n];
    let mut later = 0.0;
    for i in (0..n).rev() {
        let di = if d[i] { w[i] } else { 0.0 };
        let denom = later + di;
        if di > 0.0 && denom > 0.0 {
            out[i] = di / denom;
        }
        later += w[i];
    }
    Ok(out)
}

/// Local log-likelihood
/// `Ψ(λ) = Σ_i [D_i log λ_i + (Σ_{r>i} B_r) log(1 - λ_i)]`, with
/// `D_i = δ_i B_i` and `0 · log 0 = 0`. `lambdas` follow canonical order.
pub fn local_loglikelihood(
    sample: &SurvivalSample,
    x: f64,
    h: f64,
    lambdas: &[f64],
    spec: KernelSpec,
) -> Result<f64> {
    let w = sample.sorted_weights(x, h, spec)?;
    if lambdas.len() != w.len() {
        return Err(Error::InvalidInput("one lambda per observation required"));
    }
    let d = sample.sorted_status();
    let mut later = 0.0;
    let mut psi = 0.0;
    for i in (0..w.len()).rev() {
        let lam = lambdas[i];
        if !(0.0..=1.0).contains(&lam) {
            return Err(Error::Domain("lambda outside [0, 1]"));
        }
        let di = if d[i] { w[i] } else { 0.0 };
        if di > 0.0 {
            if lam == 0.0 {
                return Err(Error::Domain("zero lambda at an observed event"));
            }
            psi += di * ln(lam);
        }
        if later > 0.0 {
            if lam == 1.0 {
                return Err(Error::Domain("unit lambda with mass remaining at risk"));
            }
            psi += later * crate::math::ln_1p(-lam);
        }
        later += w[i];
    }
    Ok(psi)
}

/// Whether the data support identifying cured subjects: censored times
/// should extend beyond the largest observed event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identifiability {
    Supported,
    /// The largest observed time is an event; incidence estimates covering
    /// that observation collapse to zero cure probability.
    NoCensoringBeyondEvents,
    /// No events at all; incidence is identically one and latency undefined.
    NoEvents,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityReport {
    pub largest_uncensored_time: Option<f64>,
    pub largest_time: f64,
    pub censored_beyond: usize,
    pub status: Identifiability,
}

impl IdentifiabilityReport {
    pub fn warning(&self) -> bool {
        self.status != Identifiability::Supported
    }
}

pub fn identifiability_diagnostic(sample: &SurvivalSample) -> IdentifiabilityReport {
    let t1 = sample.largest_uncensored_time();
    let censored_beyond = match t1 {
        Some(t1) => sample
            .observations()
            .iter()
            .filter(|o| !o.delta && o.t > t1)
            .count(),
        None => sample.len(),
    };
    let status = match t1 {
        None => Identifiability::NoEvents,
        Some(_) if censored_beyond == 0 => Identifiability::NoCensoringBeyondEvents,
        Some(_) => Identifiability::Supported,
    };
    IdentifiabilityReport {
        largest_uncensored_time: t1,
        largest_time: sample.largest_time(),
        censored_beyond,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beran::cumulative_hazard;
    use crate::rng::{uniform, Substream};
    use proptest::prelude::*;

    const K: KernelSpec = KernelSpec::Epanechnikov;
    const HUGE: f64 = 1e9;

    fn toy_a() -> SurvivalSample {
        SurvivalSample::from_triples(&[(0.0, 1.0, true), (0.0, 2.0, false), (0.0, 3.0, true)]).unwrap()
    }

    fn toy_b() -> SurvivalSample {
        SurvivalSample::from_triples(&[(0.0, 1.0, true), (0.0, 2.0, true), (0.0, 3.0, false)]).unwrap()
    }

    #[test]
    fn incidence_hand_values() {
        assert!(incidence(&toy_a(), 0.0, HUGE, K).unwrap().abs() < 1e-12);
        assert!((incidence(&toy_b(), 0.0, HUGE, K).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let all_events = SurvivalSample::from_triples(&[(0.0, 1.0, true), (1.0, 2.0, true), (2.0, 3.0, true)]).unwrap();
        assert_eq!(incidence(&all_events, 1.0, HUGE, K).unwrap(), 0.0);
        let none = SurvivalSample::from_triples(&[(0.0, 1.0, false), (1.0, 2.0, false)]).unwrap();
        assert_eq!(incidence(&none, 0.5, HUGE, K).unwrap(), 1.0);
    }

    #[test]
    fn latency_hand_values() {
        let s = toy_b();
        assert!((latency(&s, 0.0, HUGE, 1.5, K).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(latency(&s, 0.0, HUGE, 0.0, K).unwrap(), 1.0);
        assert_eq!(latency(&s, 0.0, HUGE, 2.0, K).unwrap(), 0.0);
        assert_eq!(latency(&s, 0.0, HUGE, 50.0, K).unwrap(), 0.0);
    }

    #[test]
    fn latency_on_cured_slice_errors() {
        let none = SurvivalSample::from_triples(&[(0.0, 1.0, false), (1.0, 2.0, false)]).unwrap();
        assert!(matches!(latency(&none, 0.5, HUGE, 1.0, K), Err(Error::CuredSlice { .. })));
    }

    #[test]
    fn hazard_jump_hand_values() {
        let l = hazard_jumps(&toy_a(), 0.0, HUGE, K).unwrap();
        assert!((l[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(l[1], 0.0);
        assert!((l[2] - 1.0).abs() < 1e-12);
        let prod: f64 = l.iter().map(|v| 1.0 - v).product();
        assert!((prod - incidence(&toy_a(), 0.0, HUGE, K).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn loglik_all_censored_peaks_at_zero() {
        let s = SurvivalSample::from_triples(&[(0.0, 1.0, false), (0.0, 2.0, false), (0.0, 3.0, false)]).unwrap();
        assert_eq!(local_loglikelihood(&s, 0.0, HUGE, &[0.0; 3], K).unwrap(), 0.0);
        assert!(local_loglikelihood(&s, 0.0, HUGE, &[0.1, 0.0, 0.0], K).unwrap() < 0.0);
    }

    #[test]
    fn loglik_domain_errors() {
        let s = toy_a();
        assert!(matches!(local_loglikelihood(&s, 0.0, HUGE, &[0.0, 0.0, 1.0], K), Err(Error::Domain(_))));
        assert!(matches!(local_loglikelihood(&s, 0.0, HUGE, &[0.5, 0.0], K), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn loglik_three_point_perturbation() {
        let s = toy_a();
        let lam = hazard_jumps(&s, 0.0, HUGE, K).unwrap();
        let best = local_loglikelihood(&s, 0.0, HUGE, &lam, K).unwrap();
        assert!(best.is_finite());
        for eps in [-0.05, 0.05] {
            let mut p = lam.clone();
            p[0] += eps;
            assert!(local_loglikelihood(&s, 0.0, HUGE, &p, K).unwrap() < best);
        }
    }

    #[test]
    fn identifiability_cases() {
        let ok = SurvivalSample::from_triples(&[(0.0, 1.0, true), (0.0, 5.0, false)]).unwrap();
        let r = identifiability_diagnostic(&ok);
        assert_eq!(r.status, Identifiability::Supported);
        assert!(!r.warning());
        assert_eq!(r.censored_beyond, 1);

        let last_event = toy_a();
        let r = identifiability_diagnostic(&last_event);
        assert_eq!(r.status, Identifiability::NoCensoringBeyondEvents);
        assert!(r.warning());
        assert_eq!(incidence(&last_event, 0.0, HUGE, K).unwrap(), 0.0);

        let none = SurvivalSample::from_triples(&[(0.0, 1.0, false)]).unwrap();
        let r = identifiability_diagnostic(&none);
        assert_eq!(r.status, Identifiability::NoEvents);
        assert_eq!(r.largest_uncensored_time, None);
    }

    #[test]
    fn hazard_jumps_maximize_local_likelihood() {
        let root = Substream::root(2024).child(crate::rng::tag::PROPERTY);
        for case in 0..100u64 {
            let mut rng = root.child(case).rng();
            let n = 2 + (rng.next_u64() % 19) as usize;
            let triples: Vec<(f64, f64, bool)> = (0..n)
                .map(|_| (uniform(&mut rng) * 4.0 - 2.0, uniform(&mut rng) * 10.0, uniform(&mut rng) < 0.6))
                .collect();
            let s = SurvivalSample::from_triples(&triples).unwrap();
            let h = 0.5 + 3.0 * uniform(&mut rng);
            let x = uniform(&mut rng) * 2.0 - 1.0;
            let Ok(lam) = hazard_jumps(&s, x, h, K) else { continue };
            let best = local_loglikelihood(&s, x, h, &lam, K).unwrap();
            for _ in 0..100 {
                let pert: Vec<f64> = lam
                    .iter()
                    .map(|&l| {
                        let v = l + 0.2 * (uniform(&mut rng) - 0.5);
                        v.clamp(1e-9, 1.0 - 1e-9)
                    })
                    .collect();
                if let Ok(v) = local_loglikelihood(&s, x, h, &pert, K) {
                    assert!(best >= v, "case {case}: {best} < {v}");
                }
            }
        }
    }

    use rand_core::RngCore;

    proptest! {
        #[test]
        fn decomposition_and_bounds(triples in prop::collection::vec((-5.0f64..5.0, 0.0f64..10.0, any::<bool>()), 2..40),
                                    x in -3.0f64..3.0, h in 1.0f64..10.0, b in 1.0f64..10.0) {
            let s = SurvivalSample::from_triples(&triples).unwrap();
            if let Ok(cure) = incidence(&s, x, h, K) {
                prop_assert!((0.0..=1.0).contains(&cure));
                if let Some(t1) = s.largest_uncensored_time() {
                    let c = beran_fit(&s, x, h, K).unwrap();
                    prop_assert_eq!(c.eval(t1), cure);
                }
            }
            if let Ok(lat) = latency_curve(&s, x, b, K) {
                let cure_b = incidence(&s, x, b, K).unwrap();
                let curve = beran_fit(&s, x, b, K).unwrap();
                let mut prev = 1.0;
                for (k, &v) in lat.values.iter().enumerate() {
                    prop_assert!(v <= prev);
                    prev = v;
                    let rebuilt = cure_b + (1.0 - cure_b) * lat.raw_values[k];
                    prop_assert!((rebuilt - curve.values[k]).abs() < 1e-12);
                }
                // Shared bandwidth: latency reaches zero at the last event.
                if let Some(t1) = s.largest_uncensored_time() {
                    prop_assert!(lat.eval(t1).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn jumps_rebuild_curve(triples in prop::collection::vec((-5.0f64..5.0, 0.0f64..10.0, any::<bool>()), 1..40),
                               x in -3.0f64..3.0, h in 1.0f64..10.0) {
            let s = SurvivalSample::from_triples(&triples).unwrap();
            if let Ok(lam) = hazard_jumps(&s, x, h, K) {
                let curve = beran_fit(&s, x, h, K).unwrap();
                let mut run = 1.0;
                for (i, &l) in lam.iter().enumerate() {
                    run *= 1.0 - l;
                    let t = s.sorted_times()[i];
                    // Compare once all tied entries at t are absorbed.
                    if i + 1 == lam.len() || s.sorted_times()[i + 1] > t {
                        prop_assert!((run - curve.eval(t)).abs() < 1e-12);
                    }
                }
                let lam_total = cumulative_hazard(&s, x, h, f64::INFINITY, K).unwrap();
                prop_assert!((lam_total - lam.iter().sum::<f64>()).abs() < 1e-12);
            }
        }
    }
}
