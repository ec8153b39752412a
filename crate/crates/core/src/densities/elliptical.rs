use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::stats::{std_normal_cdf, INV_SQRT_2PI};

/// The density generator ξ of an elliptical family.
#[derive(Clone)]
pub enum Generator {
    /// ξ(t) = e^{−t}, giving the multivariate normal.
    Gaussian,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Generator {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Generator::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Generator::Gaussian => (-t).exp(),
            Generator::Custom(f) => f(t),
        }
    }

    /// Normalizing constant α_d = Γ(d/2) (2π)^{−d/2} / ∫₀^∞ x^{d/2−1} ξ(x) dx.
    ///
    /// The integral is computed numerically with the substitutions x = u² and
    /// u = t / (1 − t), which map it onto the unit interval.
    pub fn normalization(&self, d: usize) -> f64 {
        let dd = d as f64;
        let integrand = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = t / (1.0 - t);
            let v = 2.0 * u.powi(d as i32 - 1) * self.eval(u * u) / ((1.0 - t) * (1.0 - t));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let n = 40_000;
        let h = 1.0 / n as f64;
        let mut acc = integrand(0.0) + integrand(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(i as f64 * h);
        }
        let integral = acc * h / 3.0;
        gamma(dd / 2.0) * (2.0 * std::f64::consts::PI).powf(-dd / 2.0) / integral
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Gaussian => f.write_str("Gaussian"),
            Generator::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// An elliptical density α_d |Σ|^{−1/2} ξ(½ (x − μ)ᵀ Σ⁻¹ (x − μ)).
#[derive(Clone)]
pub struct EllipticalDensity {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    inv_sqrt_det: f64,
    generator: Generator,
    alpha: f64,
}

impl fmt::Debug for EllipticalDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticalDensity")
            .field("mu", &self.mu.as_slice())
            .field("sigma", &self.sigma)
            .field("generator", &self.generator)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl EllipticalDensity {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, generator: Generator) -> Result<Self> {
        let d = mu.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::Dimension { expected: d, found: sigma.nrows() });
        }
        let asym = (&sigma - sigma.transpose()).abs().max();
        if asym > 1e-10 * (1.0 + sigma.abs().max()) {
            return Err(Error::InvalidParameter("scale matrix is not symmetric".into()));
        }
        let chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| Error::DegenerateSample("scale matrix is not positive definite".into()))?;
        let det_sqrt: f64 = chol.l_dirty().diagonal().iter().product();
        let alpha = match generator {
            Generator::Gaussian => (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0),
            Generator::Custom(_) => generator.normalization(d),
        };
        Ok(EllipticalDensity { mu, sigma, chol, inv_sqrt_det: 1.0 / det_sqrt, generator, alpha })
    }

    pub fn gaussian(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        Self::new(mu, sigma, Generator::Gaussian)
    }

    pub fn standard(d: usize) -> Self {
        Self::gaussian(DVector::zeros(d), DMatrix::identity(d, d)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.generator, Generator::Gaussian)
    }

    /// Lower Cholesky factor of Σ.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// (x − μ)ᵀ Σ⁻¹ (x − μ).
    pub fn mahalanobis_sq(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: x.len() });
        }
        let centered = DVector::from_iterator(self.dim(), x.iter().zip(self.mu.iter()).map(|(a, b)| a - b));
        let mut z = centered;
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        Ok(z.norm_squared())
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        let q = self.mahalanobis_sq(x)?;
        Ok(self.alpha * self.inv_sqrt_det * self.generator.eval(0.5 * q))
    }

    /// Draws from the density; only the Gaussian generator can be sampled.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        if !self.is_gaussian() {
            return Err(Error::InvalidParameter("only Gaussian generators can be sampled".into()));
        }
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| StandardNormal.sample(rng)));
        Ok((self.chol.l_dirty().lower_triangle() * z + &self.mu).iter().copied().collect())
    }
}

/// Evaluates the elliptical density at `x`.
pub fn elliptical_pdf(e: &EllipticalDensity, x: &[f64]) -> Result<f64> {
    e.pdf(x)
}

/// Gaussian density with the sample mean and unbiased sample covariance, or
/// only its diagonal.
pub fn gaussian_fit(sample: &DMatrix<f64>, diagonal_only: bool) -> Result<EllipticalDensity> {
    let (n, d) = sample.shape();
    if n < d + 1 {
        return Err(Error::DegenerateSample(format!("{n} rows are too few for dimension {d}")));
    }
    let (mean, mut cov) = super::mean_and_covariance(sample);
    if diagonal_only {
        cov = DMatrix::from_diagonal(&cov.diagonal());
    }
    EllipticalDensity::gaussian(mean, cov)
        .map_err(|_| Error::DegenerateSample("sample covariance is rank deficient".into()))
}

/// A univariate normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal1d {
    pub mean: f64,
    pub sd: f64,
}

impl Normal1d {
    pub const STANDARD: Normal1d = Normal1d { mean: 0.0, sd: 1.0 };

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        INV_SQRT_2PI * (-0.5 * z * z).exp() / self.sd
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mean) / self.sd)
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean + self.sd * z
    }
}

/// The exact law of aᵀX for X with Gaussian density `e`: N(aᵀμ, aᵀΣa).
pub fn gaussian_projection(e: &EllipticalDensity, a: &[f64]) -> Result<Normal1d> {
    if !e.is_gaussian() {
        return Err(Error::InvalidParameter("projection needs a Gaussian generator".into()));
    }
    if a.len() != e.dim() {
        return Err(Error::Dimension { expected: e.dim(), found: a.len() });
    }
    if a.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidParameter("projection direction is the zero vector".into()));
    }
    let av = DVector::from_column_slice(a);
    let mean = av.dot(&e.mu);
    let var = (av.transpose() * &e.sigma * &av)[(0, 0)];
    Ok(Normal1d { mean, sd: var.sqrt() })
}
