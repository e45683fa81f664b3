//! Kernels and Nadaraya–Watson weights.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A symmetric probability density supported on (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelSpec {
    #[default]
    Epanechnikov,
}

impl KernelSpec {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelSpec::Epanechnikov => {
                if u > -1.0 && u < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// `(∫K², ∫v²K)`.
    pub fn constants(self) -> (f64, f64) {
        match self {
            KernelSpec::Epanechnikov => (0.6, 0.2),
        }
    }
}

pub fn kernel_eval(spec: KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

pub fn kernel_constants(spec: KernelSpec) -> (f64, f64) {
    spec.constants()
}

/// Normalized kernel weights of a sample around one covariate value.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub center: f64,
    pub bandwidth: f64,
}

/// Nadaraya–Watson weights `K_h(x - X_i) / Σ_j K_h(x - X_j)`.
pub fn nw_weights(xs: &[f64], x: f64, h: f64, spec: KernelSpec) -> Result<WeightVector> {
    check_bandwidth(h)?;
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty covariate sequence"));
    }
    let mut weights: Vec<f64> = xs.iter().map(|&xi| spec.eval((x - xi) / h)).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyNeighborhood { x, h });
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(WeightVector {
        weights,
        center: x,
        bandwidth: h,
    })
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput("bandwidth must be positive and finite"))
    }
}
