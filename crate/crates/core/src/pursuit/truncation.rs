use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::densities::{kde_fit, EllipticalDensity};
use crate::error::{Error, Result};
use crate::stats::gaussian_peak;

/// Lower density threshold θ_m = κ · m^{−ν} used to discard points where
/// kernel estimates are unreliable.
///
/// The threshold is relative: for a k-dimensional density in whitened
/// coordinates it is multiplied by the standard normal peak (2π)^{−k/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationRule {
    /// Exponent ν in (0, 1/(4+d)); `None` picks 1/(2(4+d)).
    pub nu: Option<f64>,
    /// Scale constant κ.
    pub scale: f64,
}

impl Default for TruncationRule {
    fn default() -> Self {
        TruncationRule { nu: None, scale: 0.05 }
    }
}

impl TruncationRule {
    pub fn with_nu(nu: f64) -> Self {
        TruncationRule { nu: Some(nu), ..Self::default() }
    }

    pub fn nu_for(&self, d: usize) -> f64 {
        self.nu.unwrap_or(1.0 / (2.0 * (4.0 + d as f64)))
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let nu = self.nu_for(d);
        let upper = 1.0 / (4.0 + d as f64);
        if !(nu > 0.0 && nu < upper) {
            return Err(Error::InvalidParameter(format!("nu must lie in (0, {upper:.4}), got {nu}")));
        }
        if !(self.scale > 0.0) {
            return Err(Error::InvalidParameter("truncation scale must be positive".into()));
        }
        Ok(())
    }

    /// κ m^{−ν}.
    pub fn relative_threshold(&self, m: usize, d: usize) -> f64 {
        self.scale * (m as f64).powf(-self.nu_for(d))
    }

    /// Absolute threshold for a k-dimensional whitened density.
    pub fn threshold(&self, m: usize, d: usize, k: usize) -> f64 {
        self.relative_threshold(m, d) * gaussian_peak(k)
    }
}

/// Keeps the rows of `sample_f` where the kernel estimate of `f` reaches the
/// threshold and the rows of `sample_g` where the standard normal density
/// does, then trims the longer subsample so both have the same length.
///
/// Both samples are expected in whitened coordinates.
pub fn truncate(
    sample_f: &DMatrix<f64>,
    sample_g: &DMatrix<f64>,
    rule: &TruncationRule,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, d) = sample_f.shape();
    if m < 20 {
        return Err(Error::DegenerateSample(format!("{m} rows; truncation needs at least 20")));
    }
    if sample_g.ncols() != d {
        return Err(Error::Dimension { expected: d, found: sample_g.ncols() });
    }
    rule.validate(d)?;
    let theta = rule.threshold(m, d, d);
    let f_m = kde_fit(sample_f)?;
    let g = EllipticalDensity::standard(d);
    let keep_f: Vec<usize> = (0..m).filter(|&i| f_m.pdf(&row(sample_f, i)) >= theta).collect();
    let keep_g: Vec<usize> =
        (0..sample_g.nrows()).filter(|&i| g.pdf(&row(sample_g, i)).map(|v| v >= theta).unwrap_or(false)).collect();
    let n = keep_f.len().min(keep_g.len());
    if n < 10 {
        return Err(Error::OverTruncation { survivors: n, threshold: theta });
    }
    Ok((sample_f.select_rows(&keep_f[..n]), sample_g.select_rows(&keep_g[..n])))
}

fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}
