//! Thin wrappers over `libm` so numeric code reads like `std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Logistic function `e^z / (1 + e^z)`, stable for large |z|.
#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `n` points equispaced on a log scale from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (ln(lo), ln(hi));
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                exp(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_space_matches_reference_grid() {
        // 100 points from 1.2 to 20: the 50th and 70th are 4.83 and 8.53.
        let g = log_space(1.2, 20.0, 100);
        assert_eq!(g.len(), 100);
        assert!((g[49] - 4.83).abs() < 5e-3, "{}", g[49]);
        assert!((g[69] - 8.53).abs() < 5e-3, "{}", g[69]);
        let b = log_space(10.0, 40.0, 100);
        assert!((b[29] - 15.01).abs() < 5e-3, "{}", b[29]);
        assert!((b[19] - 13.05).abs() < 5e-3, "{}", b[19]);
        assert_eq!(*g.last().unwrap(), 20.0);
    }

    #[test]
    fn logistic_is_symmetric() {
        for z in [-40.0, -3.0, 0.0, 0.7, 25.0] {
            assert!((logistic(z) + logistic(-z) - 1.0).abs() < 1e-15);
        }
    }
}
