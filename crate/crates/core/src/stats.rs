//! Small numerical helpers shared across modules.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail 1 − Φ(x), accurate far into the tail.
pub(crate) fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Φ⁻¹(p), polished with one Newton step on Φ.
pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    let q = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !q.is_finite() {
        return q;
    }
    let err = if q > 0.0 { (1.0 - p) - std_normal_sf(q) } else { std_normal_cdf(q) - p };
    q - err / std_normal_pdf(q)
}

/// Peak of the standard Gaussian density in `k` dimensions.
pub(crate) fn gaussian_peak(k: usize) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-(k as f64) / 2.0)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_helpers_agree() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((std_normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((std_normal_cdf(std_normal_quantile(0.9)) - 0.9).abs() < 1e-12);
        assert!((std_normal_sf(1.0) + std_normal_cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((gaussian_peak(2) - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn variance_is_unbiased() {
        assert_eq!(variance(&[1.0, -1.0, 1.0, -1.0]), 4.0 / 3.0);
        assert_eq!(variance(&[2.0]), 0.0);
    }
}
