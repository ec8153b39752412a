use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::stats::{std_normal_cdf, INV_SQRT_2PI};

/// Kernel contributions beyond this many bandwidths are below 1e-15 and are
/// skipped by the one-dimensional fast path.
const CUTOFF: f64 = 8.5;

/// Product-Gaussian kernel density estimate.
///
/// Bandwidths follow `h_j = sd_j · n^{−1/(4+d)}`, so rescaling a coordinate
/// rescales its bandwidth by the same factor. One-dimensional estimates keep
/// their points sorted and only sum kernels within `8.5 h` of the query.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDensity {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    bandwidths: Vec<f64>,
    inv_h: Vec<f64>,
    norm: f64,
}

impl KernelDensity {
    /// Fits row-major `points` of dimension `dim` with the default bandwidth rule.
    pub fn fit_rows(points: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::Dimension { expected: dim, found: points.len() });
        }
        let n = points.len() / dim;
        if n < 2 {
            return Err(Error::DegenerateSample(format!("{n} points cannot define a bandwidth")));
        }
        let factor = (n as f64).powf(-1.0 / (4.0 + dim as f64));
        let mut bandwidths = Vec::with_capacity(dim);
        for j in 0..dim {
            let col: Vec<f64> = points.iter().skip(j).step_by(dim).copied().collect();
            let sd = crate::stats::variance(&col).sqrt();
            if !(sd > 0.0) || !sd.is_finite() {
                return Err(Error::DegenerateSample(format!("coordinate {j} has zero variance")));
            }
            bandwidths.push(sd * factor);
        }
        Self::with_bandwidths(points.to_vec(), dim, bandwidths)
    }

    pub fn fit_1d(values: &[f64]) -> Result<Self> {
        Self::fit_rows(values, 1)
    }

    /// Builds an estimate with caller-chosen bandwidths.
    pub fn with_bandwidths(mut points: Vec<f64>, dim: usize, bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.len() != dim || dim == 0 || points.len() % dim != 0 {
            return Err(Error::Dimension { expected: dim, found: bandwidths.len() });
        }
        if points.is_empty() {
            return Err(Error::DegenerateSample("no points".into()));
        }
        if bandwidths.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidParameter("bandwidths must be positive".into()));
        }
        let n = points.len() / dim;
        if dim == 1 {
            points.sort_by(f64::total_cmp);
        }
        let inv_h: Vec<f64> = bandwidths.iter().map(|h| 1.0 / h).collect();
        let norm = inv_h.iter().product::<f64>() * INV_SQRT_2PI.powi(dim as i32);
        Ok(KernelDensity { points, n, dim, bandwidths, inv_h, norm })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// Unnormalized kernel sum Σ_i exp(−½ Σ_j ((x_j − p_ij)/h_j)²).
    fn kernel_sum(&self, x: &[f64]) -> f64 {
        if self.dim == 1 {
            return self.kernel_sum_1d(x[0]);
        }
        let mut total = 0.0;
        for p in self.points.chunks_exact(self.dim) {
            let mut e = 0.0;
            for j in 0..self.dim {
                let z = (x[j] - p[j]) * self.inv_h[j];
                e += z * z;
            }
            total += (-0.5 * e).exp();
        }
        total
    }

    fn kernel_sum_1d(&self, x: f64) -> f64 {
        let reach = CUTOFF * self.bandwidths[0];
        let start = self.points.partition_point(|&p| p < x - reach);
        let mut total = 0.0;
        for &p in &self.points[start..] {
            if p > x + reach {
                break;
            }
            let z = (x - p) * self.inv_h[0];
            total += (-0.5 * z * z).exp();
        }
        total
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.norm * self.kernel_sum(x) / self.n as f64
    }

    pub fn pdf_1d(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.norm * self.kernel_sum_1d(x) / self.n as f64
    }

    /// Leave-one-out estimate at `x`, where `x` is one of the fitted points.
    ///
    /// The point's own kernel equals exactly one before normalization and is
    /// removed from the sum.
    pub fn pdf_without_self(&self, x: &[f64]) -> f64 {
        self.norm * (self.kernel_sum(x) - 1.0).max(0.0) / (self.n as f64 - 1.0)
    }

    pub fn pdf_1d_without_self(&self, x: f64) -> f64 {
        self.norm * (self.kernel_sum_1d(x) - 1.0).max(0.0) / (self.n as f64 - 1.0)
    }

    /// Distribution function of a one-dimensional estimate.
    pub fn cdf_1d(&self, x: f64) -> f64 {
        let h = self.bandwidths[0];
        self.points.iter().map(|&p| std_normal_cdf((x - p) / h)).sum::<f64>() / self.n as f64
    }

    /// One draw from the estimate: a uniformly chosen point plus kernel noise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let i = rng.random_range(0..self.n);
        let p = &self.points[i * self.dim..(i + 1) * self.dim];
        p.iter()
            .zip(&self.bandwidths)
            .map(|(c, h)| {
                let z: f64 = StandardNormal.sample(rng);
                c + h * z
            })
            .collect()
    }

    pub fn sample_1d<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let i = rng.random_range(0..self.n);
        let z: f64 = StandardNormal.sample(rng);
        self.points[i] + self.bandwidths[0] * z
    }
}

/// Fits a kernel estimate to the rows of `points`.
pub fn kde_fit(points: &DMatrix<f64>) -> Result<KernelDensity> {
    let (n, d) = points.shape();
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..d).map(move |j| points[(i, j)])).collect();
    KernelDensity::fit_rows(&rows, d)
}

pub fn kde_pdf(k: &KernelDensity, x: &[f64]) -> Result<f64> {
    if x.len() != k.dim() {
        return Err(Error::Dimension { expected: k.dim(), found: x.len() });
    }
    Ok(k.pdf(x))
}

pub fn kde_sample<R: Rng + ?Sized>(k: &KernelDensity, rng: &mut R) -> Vec<f64> {
    k.sample(rng)
}
