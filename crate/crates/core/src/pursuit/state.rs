use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dot, truncate, unit_canonical, PursuitConfig};
use crate::densities::{EllipticalDensity, KernelDensity};
use crate::divergence::PhiSpec;
use crate::error::{Error, Result};
use crate::stats::gaussian_peak;

/// One multiplicative update of the instrumental density: the direction and
/// the kernel estimate of the f-sample projected on it. The matching
/// denominator is the standard normal density.
#[derive(Debug, Clone)]
pub struct Step {
    pub direction: Vec<f64>,
    pub numerator: KernelDensity,
}

/// The current density g^(k)(x) = φ_d(x) Π_j f_{a_j,n}(a_jᵀx) / φ(a_jᵀx)
/// together with the samples the dual criterion averages over.
///
/// Densities that do not depend on the candidate direction (the kernel
/// estimate of `f` and g^(k) itself, at both samples) are computed once per
/// state.
#[derive(Debug, Clone)]
pub struct PursuitState {
    spec: PhiSpec,
    config: PursuitConfig,
    dim: usize,
    m: usize,
    base: EllipticalDensity,
    data_f: Vec<f64>,
    data_g: Vec<f64>,
    f_kde: KernelDensity,
    f_at_f: Vec<f64>,
    f_at_g: Vec<f64>,
    g_at_f: Vec<f64>,
    g_at_g: Vec<f64>,
    steps: Vec<Step>,
}

impl PursuitState {
    /// Builds the initial state from a whitened sample: draws a g-sample of
    /// the same size from the truncated standard normal and truncates the
    /// f-sample.
    pub fn new<R: Rng + ?Sized>(
        white: &DMatrix<f64>,
        spec: PhiSpec,
        config: PursuitConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let (m, d) = white.shape();
        spec.validate()?;
        if !spec.is_smooth() {
            return Err(Error::UnsupportedDivergence("L1"));
        }
        config.truncation.validate(d)?;
        config.optimizer.validate()?;
        let theta = config.truncation.threshold(m, d, d);
        let base = EllipticalDensity::standard(d);
        let mut g_rows = Vec::with_capacity(m * d);
        draw_truncated(
            m,
            d,
            theta,
            rng,
            &mut g_rows,
            |z| base.pdf(z).unwrap_or(0.0),
            |rng| (0..d).map(|_| StandardNormal.sample(rng)).collect(),
        )?;
        let g_sample = DMatrix::from_row_slice(m, d, &g_rows);
        let (kept_f, kept_g) = truncate(white, &g_sample, &config.truncation)?;
        let mut state = Self::with_samples(&kept_f, &kept_g, spec, config)?;
        state.m = m;
        Ok(state)
    }

    /// Builds a state from explicit f- and g-samples without truncating them.
    /// The truncation threshold then refers to the f-sample size.
    pub fn with_samples(
        data_f: &DMatrix<f64>,
        data_g: &DMatrix<f64>,
        spec: PhiSpec,
        config: PursuitConfig,
    ) -> Result<Self> {
        let d = data_f.ncols();
        if data_g.ncols() != d {
            return Err(Error::Dimension { expected: d, found: data_g.ncols() });
        }
        spec.validate()?;
        if !spec.is_smooth() {
            return Err(Error::UnsupportedDivergence("L1"));
        }
        let rows = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect()
        };
        let data_f = rows(data_f);
        let data_g = rows(data_g);
        let f_kde = KernelDensity::fit_rows(&data_f, d)?;
        let loo = config.leave_one_out;
        let f_at_f =
            data_f.chunks_exact(d).map(|x| if loo { f_kde.pdf_without_self(x) } else { f_kde.pdf(x) }).collect();
        let f_at_g = data_g.chunks_exact(d).map(|y| f_kde.pdf(y)).collect();
        let mut state = PursuitState {
            spec,
            config,
            dim: d,
            m: data_f.len() / d,
            base: EllipticalDensity::standard(d),
            data_f,
            data_g,
            f_kde,
            f_at_f,
            f_at_g,
            g_at_f: Vec::new(),
            g_at_g: Vec::new(),
            steps: Vec::new(),
        };
        state.refresh_g_values();
        Ok(state)
    }

    fn refresh_g_values(&mut self) {
        let d = self.dim;
        let loo = self.config.leave_one_out;
        self.g_at_f = self.data_f.chunks_exact(d).map(|x| self.density(x, loo)).collect();
        self.g_at_g = self.data_g.chunks_exact(d).map(|y| self.density(y, false)).collect();
    }

    pub fn spec(&self) -> PhiSpec {
        self.spec
    }

    pub fn config(&self) -> &PursuitConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps taken so far.
    pub fn k(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn directions(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.direction.clone()).collect()
    }

    pub fn base(&self) -> &EllipticalDensity {
        &self.base
    }

    /// Size of the sample the truncation threshold is computed from.
    pub fn original_size(&self) -> usize {
        self.m
    }

    pub fn n_f(&self) -> usize {
        self.data_f.len() / self.dim
    }

    pub fn n_g(&self) -> usize {
        self.data_g.len() / self.dim
    }

    pub fn f_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data_f.chunks_exact(self.dim)
    }

    pub fn g_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data_g.chunks_exact(self.dim)
    }

    pub fn data_f(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_f(), self.dim, &self.data_f)
    }

    pub fn data_g(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_g(), self.dim, &self.data_g)
    }

    pub fn f_kde(&self) -> &KernelDensity {
        &self.f_kde
    }

    /// Truncation threshold for a k-dimensional density.
    pub fn threshold(&self, k: usize) -> f64 {
        self.config.truncation.threshold(self.m, self.dim, k)
    }

    pub(crate) fn f_at_f(&self) -> &[f64] {
        &self.f_at_f
    }

    pub(crate) fn f_at_g(&self) -> &[f64] {
        &self.f_at_g
    }

    pub(crate) fn g_at_f(&self) -> &[f64] {
        &self.g_at_f
    }

    pub(crate) fn g_at_g(&self) -> &[f64] {
        &self.g_at_g
    }

    /// g^(k)(x).
    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.density(x, false)
    }

    /// Evaluates g^(k). With `without_self`, `x` must be an f-sample point and
    /// the numerators leave out its own kernel.
    fn density(&self, x: &[f64], without_self: bool) -> f64 {
        if self.steps.is_empty() {
            return self.base.pdf(x).unwrap_or(0.0);
        }
        let mut resid = dot(x, x);
        let mut prod = 1.0;
        for s in &self.steps {
            let t = dot(&s.direction, x);
            resid -= t * t;
            prod *= if without_self { s.numerator.pdf_1d_without_self(t) } else { s.numerator.pdf_1d(t) };
        }
        let free = self.dim - self.steps.len();
        prod * gaussian_peak(free) * (-0.5 * resid.max(0.0)).exp()
    }

    /// Rejects `a` unless it is orthogonal to every stored direction within 1e−8.
    pub fn check_orthogonal(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: a.len() });
        }
        for s in &self.steps {
            let c = dot(&s.direction, a);
            if c.abs() > 1e-8 {
                return Err(Error::Constraint(format!(
                    "direction has inner product {c:.3e} with a previous direction"
                )));
            }
        }
        Ok(())
    }

    /// An orthonormal basis of the complement of the stored directions.
    pub fn complement_basis(&self) -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = self.directions();
        let mut out = Vec::new();
        let want = self.dim - self.steps.len();
        let mut candidates: Vec<(f64, Vec<f64>)> = (0..self.dim)
            .map(|j| {
                let mut e = vec![0.0; self.dim];
                e[j] = 1.0;
                for b in &basis {
                    let c = dot(b, &e);
                    e.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
                (dot(&e, &e), e)
            })
            .collect();
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (_, mut e) in candidates {
            if out.len() == want {
                break;
            }
            for b in &basis {
                let c = dot(b, &e);
                e.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-6 {
                e.iter_mut().for_each(|x| *x /= norm);
                basis.push(e.clone());
                out.push(e);
            }
        }
        out
    }

    /// One draw from g^(k): a standard normal vector whose components along
    /// the stored directions are replaced by draws from the numerators.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
        for s in &self.steps {
            let t = dot(&s.direction, &z);
            let target = s.numerator.sample_1d(rng);
            z.iter_mut().zip(&s.direction).for_each(|(x, a)| *x += (target - t) * a);
        }
        z
    }

    /// Appends a step along `a` and redraws the g-sample from the new density.
    pub fn update<R: Rng + ?Sized>(&self, a: &[f64], rng: &mut R) -> Result<Self> {
        if self.steps.len() == self.dim {
            return Err(Error::Constraint("all directions have already been found".into()));
        }
        let a = unit_canonical(a)?;
        self.check_orthogonal(&a)?;
        let mut a = a;
        for s in &self.steps {
            let c = dot(&s.direction, &a);
            a.iter_mut().zip(&s.direction).for_each(|(x, y)| *x -= c * y);
        }
        let a = unit_canonical(&a)?;
        let proj: Vec<f64> = self.f_rows().map(|x| dot(&a, x)).collect();
        let numerator = KernelDensity::fit_1d(&proj)?;
        let mut next = self.clone();
        next.steps.push(Step { direction: a, numerator });
        let theta = next.threshold(next.dim);
        let n_g = self.n_g();
        let mut g_rows = Vec::with_capacity(n_g * self.dim);
        draw_truncated(n_g, self.dim, theta, rng, &mut g_rows, |y| next.pdf(y), |rng| next.sample(rng))?;
        next.data_g = g_rows;
        next.f_at_g = next.data_g.chunks_exact(next.dim).map(|y| next.f_kde.pdf(y)).collect();
        next.refresh_g_values();
        Ok(next)
    }
}

/// Rejection sampling from a density restricted to where it reaches `theta`.
fn draw_truncated<R: Rng + ?Sized>(
    count: usize,
    dim: usize,
    theta: f64,
    rng: &mut R,
    out: &mut Vec<f64>,
    pdf: impl Fn(&[f64]) -> f64,
    mut draw: impl FnMut(&mut R) -> Vec<f64>,
) -> Result<()> {
    let budget = 1000 * count.max(1);
    let mut accepted = 0;
    for _ in 0..budget {
        let y = draw(rng);
        debug_assert_eq!(y.len(), dim);
        if pdf(&y) >= theta {
            out.extend_from_slice(&y);
            accepted += 1;
            if accepted == count {
                return Ok(());
            }
        }
    }
    Err(Error::OverTruncation { survivors: accepted, threshold: theta })
}

/// One draw from the state's density.
pub fn state_sample<R: Rng + ?Sized>(state: &PursuitState, rng: &mut R) -> Vec<f64> {
    state.sample(rng)
}

/// Multiplies the state's density by the projected ratio along `a`.
pub fn update_state<R: Rng + ?Sized>(state: &PursuitState, a: &[f64], rng: &mut R) -> Result<PursuitState> {
    state.update(a, rng)
}
