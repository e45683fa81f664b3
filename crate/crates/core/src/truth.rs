//! Closed-form truth for the two benchmark mixture cure models, and the
//! asymptotic MSE of the incidence estimator built from it.
//!
//! Both models share exponential censoring with rate 0.3 and a
//! `U(-20, 20)` covariate.
//!
//! * Model 1: logistic uncured probability `p(x) = L(0.476 + 0.358 x)` and
//!   an exponential latency with rate `λ(x) = exp((x + 20) / 40)`,
//!   truncated at `τ0 = 4.605`.
//! * Model 2: cubic logistic `p(x) = L(0.0476 - 0.2558 x - 0.0027 x² + 0.0020 x³)`
//!   and latency `½(exp(-α(x) t⁵) + exp(-100 t⁵))`, `α(x) = exp((x + 20) / 40) / 5`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::math::{exp, exp_m1, logistic, powf};
use crate::quadrature::integrate;

pub const CENSORING_RATE: f64 = 0.3;
pub const COVARIATE_LOW: f64 = -20.0;
pub const COVARIATE_HIGH: f64 = 20.0;

const MODEL1_BETA: [f64; 2] = [0.476, 0.358];
const MODEL1_TAU0: f64 = 4.605;
const MODEL2_BETA: [f64; 4] = [0.0476, -0.2558, -0.0027, 0.0020];
const MODEL2_FAST_RATE: f64 = 100.0;

/// Quadrature tolerance for the published sub-distribution values.
pub const SUBDISTRIBUTION_TOL: f64 = 1e-9;
/// Tighter tolerance for the integrals that get differenced twice.
const PHI_TOL: f64 = 1e-13;
/// Finite-difference step for `Φ(·, x)`, as a fraction of the covariate range.
const PHI_STEP_FRACTION: f64 = 1e-3;
/// Below this |μ(x)| the optimal bandwidth is reported as unbounded.
pub const CURVATURE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    Model1,
    Model2,
}

impl ModelId {
    pub fn number(self) -> u8 {
        match self {
            ModelId::Model1 => 1,
            ModelId::Model2 => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(ModelId::Model1),
            2 => Some(ModelId::Model2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelTruth {
    pub id: ModelId,
    /// End of the latency support (Model 2: where `S0(t|-20) < 1e-12`).
    tau0: f64,
}

impl ModelTruth {
    pub fn new(id: ModelId) -> Self {
        let tau0 = match id {
            ModelId::Model1 => MODEL1_TAU0,
            ModelId::Model2 => model2_effective_tau0(),
        };
        ModelTruth { id, tau0 }
    }

    pub fn model1() -> Self {
        Self::new(ModelId::Model1)
    }

    pub fn model2() -> Self {
        Self::new(ModelId::Model2)
    }

    /// Largest time at which the latency is still (effectively) positive.
    pub fn effective_tau0(&self) -> f64 {
        self.tau0
    }

    fn linear_predictor(&self, x: f64) -> f64 {
        match self.id {
            ModelId::Model1 => MODEL1_BETA[0] + MODEL1_BETA[1] * x,
            ModelId::Model2 => {
                let [b0, b1, b2, b3] = MODEL2_BETA;
                b0 + x * (b1 + x * (b2 + x * b3))
            }
        }
    }

    /// `p(x)`: probability of not being cured.
    pub fn uncured_probability(&self, x: f64) -> f64 {
        logistic(self.linear_predictor(x))
    }

    /// `1 - p(x)`.
    pub fn cure_probability(&self, x: f64) -> f64 {
        logistic(-self.linear_predictor(x))
    }

    /// Second derivative of `p(x)` in closed form.
    pub fn uncured_probability_second_derivative(&self, x: f64) -> f64 {
        let (d1, d2) = match self.id {
            ModelId::Model1 => (MODEL1_BETA[1], 0.0),
            ModelId::Model2 => {
                let [_, b1, b2, b3] = MODEL2_BETA;
                (b1 + 2.0 * b2 * x + 3.0 * b3 * x * x, 2.0 * b2 + 6.0 * b3 * x)
            }
        };
        let p = self.uncured_probability(x);
        let l1 = p * (1.0 - p);
        let l2 = l1 * (1.0 - 2.0 * p);
        l2 * d1 * d1 + l1 * d2
    }

    /// Model 1 latency rate `λ(x)`.
    pub fn model1_rate(x: f64) -> f64 {
        exp((x + 20.0) / 40.0)
    }

    /// Model 2 slow-component rate `α(x)`.
    pub fn model2_rate(x: f64) -> f64 {
        exp((x + 20.0) / 40.0) / 5.0
    }

    /// Latency `S0(t|x)`.
    pub fn latency(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self.id {
            ModelId::Model1 => {
                if t > MODEL1_TAU0 {
                    return 0.0;
                }
                let l = Self::model1_rate(x);
                // (e^{-λt} - e^{-λτ}) / (1 - e^{-λτ})
                (exp(-l * t) - exp(-l * MODEL1_TAU0)) / -exp_m1(-l * MODEL1_TAU0)
            }
            ModelId::Model2 => {
                let t5 = powf(t, 5.0);
                0.5 * (exp(-Self::model2_rate(x) * t5) + exp(-MODEL2_FAST_RATE * t5))
            }
        }
    }

    /// Latency density `f0(t|x) = -∂S0/∂t`.
    pub fn latency_density(&self, x: f64, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self.id {
            ModelId::Model1 => {
                if t > MODEL1_TAU0 {
                    return 0.0;
                }
                let l = Self::model1_rate(x);
                l * exp(-l * t) / -exp_m1(-l * MODEL1_TAU0)
            }
            ModelId::Model2 => {
                let t4 = t * t * t * t;
                let t5 = t4 * t;
                let a = Self::model2_rate(x);
                0.5 * (5.0 * a * t4 * exp(-a * t5)
                    + 5.0 * MODEL2_FAST_RATE * t4 * exp(-MODEL2_FAST_RATE * t5))
            }
        }
    }

    /// Improper conditional survival `S(t|x) = 1 - p(x) + p(x) S0(t|x)`.
    pub fn survival(&self, x: f64, t: f64) -> f64 {
        let p = self.uncured_probability(x);
        1.0 - p + p * self.latency(x, t)
    }

    /// Censoring survival `Ḡ(t)`.
    pub fn censoring_survival(t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            exp(-CENSORING_RATE * t)
        }
    }

    /// Covariate density and its derivative on the design interval.
    pub fn covariate_density(x: f64) -> (f64, f64) {
        if (COVARIATE_LOW..=COVARIATE_HIGH).contains(&x) {
            (1.0 / (COVARIATE_HIGH - COVARIATE_LOW), 0.0)
        } else {
            (0.0, 0.0)
        }
    }

    /// `1 - H(t|x) = S(t|x) Ḡ(t)`.
    pub fn observed_survival(&self, x: f64, t: f64) -> f64 {
        self.survival(x, t) * Self::censoring_survival(t)
    }

    /// Density of the uncensored sub-distribution, `dH¹(t|x)/dt = Ḡ(t) p(x) f0(t|x)`.
    pub fn uncensored_density(&self, x: f64, t: f64) -> f64 {
        Self::censoring_survival(t) * self.uncured_probability(x) * self.latency_density(x, t)
    }

    /// `(H(t|x), H¹(t|x), G(t))`.
    pub fn subdistributions(&self, x: f64, t: f64) -> Result<(f64, f64, f64)> {
        if t <= 0.0 {
            return Ok((0.0, 0.0, 0.0));
        }
        let g = 1.0 - Self::censoring_survival(t);
        if t.is_infinite() {
            let (h1, _) = integrate(|u| self.uncensored_density(x, u), 0.0, self.tau0, SUBDISTRIBUTION_TOL)?;
            return Ok((1.0, h1, 1.0));
        }
        let hh = 1.0 - self.observed_survival(x, t);
        let upper = t.min(self.tau0);
        let (h1, _) = integrate(|u| self.uncensored_density(x, u), 0.0, upper, SUBDISTRIBUTION_TOL)?;
        Ok((hh, h1, g))
    }

    /// `σ²(x) = (1/m(x)) ∫ dH¹(t|x) / (1 - H(t|x))²`.
    pub fn sigma2(&self, x: f64) -> Result<f64> {
        let (m, _) = Self::covariate_density(x);
        if m <= 0.0 {
            return Err(Error::InvalidInput("covariate outside the design interval"));
        }
        let (v, _) = integrate(
            |t| {
                let s = self.observed_survival(x, t);
                self.uncensored_density(x, t) / (s * s)
            },
            0.0,
            self.tau0,
            PHI_TOL,
        )?;
        Ok(v / m)
    }

    /// `Φ(u, x) = ∫ dH¹(t|u)/(1 - H(t|x)) - ∫ (1 - H(t|u))/(1 - H(t|x))² dH¹(t|x)`.
    pub fn phi(&self, u: f64, x: f64) -> Result<f64> {
        let (v, _) = integrate(
            |t| {
                let sx = self.observed_survival(x, t);
                let su = self.observed_survival(u, t);
                (self.uncensored_density(u, t) * sx - su * self.uncensored_density(x, t)) / (sx * sx)
            },
            0.0,
            self.tau0,
            PHI_TOL,
        )?;
        Ok(v)
    }

    /// `(Φ'(x,x), Φ''(x,x))` by central differences in `u` with one
    /// Richardson refinement.
    pub fn phi_derivatives(&self, x: f64) -> Result<(f64, f64)> {
        let s = PHI_STEP_FRACTION * (COVARIATE_HIGH - COVARIATE_LOW);
        let f0 = self.phi(x, x)?;
        let diffs = |step: f64| -> Result<(f64, f64)> {
            let fp = self.phi(x + step, x)?;
            let fm = self.phi(x - step, x)?;
            Ok(((fp - fm) / (2.0 * step), (fp - 2.0 * f0 + fm) / (step * step)))
        };
        let (d1a, d2a) = diffs(s)?;
        let (d1b, d2b) = diffs(0.5 * s)?;
        Ok(((4.0 * d1b - d1a) / 3.0, (4.0 * d2b - d2a) / 3.0))
    }

    /// Curvature term `μ(x) = (2 Φ'(x,x) m'(x) + Φ''(x,x) m(x)) / m(x)`.
    pub fn mu(&self, x: f64) -> Result<f64> {
        let (m, dm) = Self::covariate_density(x);
        if m <= 0.0 {
            return Err(Error::InvalidInput("covariate outside the design interval"));
        }
        let (d1, d2) = self.phi_derivatives(x)?;
        Ok((2.0 * d1 * dm + d2 * m) / m)
    }

    pub fn amse_report(&self, x: f64, spec: KernelSpec) -> Result<AmseReport> {
        let (c_k, d_k) = spec.constants();
        Ok(AmseReport {
            x,
            cure_probability: self.cure_probability(x),
            mu: self.mu(x)?,
            sigma2: self.sigma2(x)?,
            c_k,
            d_k,
        })
    }

    pub fn amse(&self, x: f64, h: f64, n: usize, spec: KernelSpec) -> Result<f64> {
        Ok(self.amse_report(x, spec)?.amse(h, n))
    }

    pub fn amse_optimal_bandwidth(&self, x: f64, n: usize, spec: KernelSpec) -> Result<f64> {
        self.amse_report(x, spec)?.optimal_bandwidth(n)
    }

    /// Roots of `p''(x) = 0` on the design interval, by scanning and bisection.
    pub fn inflection_points(&self) -> Vec<f64> {
        let f = |x: f64| self.uncured_probability_second_derivative(x);
        let steps = 4000;
        let dx = (COVARIATE_HIGH - COVARIATE_LOW) / steps as f64;
        let mut roots = Vec::new();
        let mut a = COVARIATE_LOW;
        let mut fa = f(a);
        for i in 1..=steps {
            let b = COVARIATE_LOW + i as f64 * dx;
            let fb = f(b);
            if fa == 0.0 {
                roots.push(a);
            } else if fa * fb < 0.0 {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            a = b;
            fa = fb;
        }
        roots
    }
}

fn model2_effective_tau0() -> f64 {
    // Slowest-decaying component is at x = -20: ½ exp(-α(-20) t⁵) = 1e-12.
    let a = ModelTruth::model2_rate(COVARIATE_LOW);
    let t5 = crate::math::ln(0.5e12) / a;
    powf(t5, 0.2)
}

/// Asymptotic MSE of the incidence estimator at one covariate value:
/// `AMSE(h) = (1-p)² c_K σ² / (n h) + (h² d_K (1-p) μ / 2)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmseReport {
    pub x: f64,
    pub cure_probability: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub c_k: f64,
    pub d_k: f64,
}

impl AmseReport {
    pub fn variance(&self, h: f64, n: usize) -> f64 {
        let c = self.cure_probability;
        c * c * self.c_k * self.sigma2 / (n as f64 * h)
    }

    pub fn squared_bias(&self, h: f64) -> f64 {
        let b = h * h * 0.5 * self.d_k * self.cure_probability * self.mu;
        b * b
    }

    pub fn amse(&self, h: f64, n: usize) -> f64 {
        self.variance(h, n) + self.squared_bias(h)
    }

    /// `(c_K σ² / (d_K² μ²))^{1/5} n^{-1/5}`.
    pub fn optimal_bandwidth(&self, n: usize) -> Result<f64> {
        if self.mu.abs() < CURVATURE_TOLERANCE {
            return Err(Error::DegenerateCurvature { x: self.x, mu: self.mu });
        }
        let ratio = self.c_k * self.sigma2 / (self.d_k * self.d_k * self.mu * self.mu);
        Ok(powf(ratio, 0.2) * powf(n as f64, -0.2))
    }
}
