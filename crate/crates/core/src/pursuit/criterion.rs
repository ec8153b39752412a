use super::{dot, unit_canonical, PursuitState};
use crate::densities::KernelDensity;
use crate::error::{Error, Result};
use crate::stats::{std_normal_pdf, variance};

/// Smallest density value used as a divisor, to keep ratios finite.
const FLOOR: f64 = 1e-290;

/// Everything the dual criterion needs about one candidate direction b:
/// the ratio r_b = g f_{b,n} / (f_n g_b) at both samples and the weight
/// f_{b,n}/g_b at the g-sample. Points failing the truncation conditions
/// along b are marked with NaN.
#[derive(Debug, Clone)]
pub struct ProjectionTerms {
    pub direction: Vec<f64>,
    kde: KernelDensity,
    ratio_f: Vec<f64>,
    ratio_g: Vec<f64>,
    weight_g: Vec<f64>,
}

impl ProjectionTerms {
    pub fn new(state: &PursuitState, b: &[f64]) -> Result<Self> {
        let b = unit_canonical(b)?;
        state.check_orthogonal(&b)?;
        let cfg = state.config();
        let (theta_d, theta_1) = (state.threshold(state.dim()), state.threshold(1));
        let proj_f: Vec<f64> = state.f_rows().map(|x| dot(&b, x)).collect();
        let kde = KernelDensity::fit_1d(&proj_f)?;
        let ratio_f = proj_f
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let fb = if cfg.leave_one_out { kde.pdf_1d_without_self(t) } else { kde.pdf_1d(t) };
                let fx = state.f_at_f()[i];
                if fx < theta_d || fb < theta_1 {
                    f64::NAN
                } else {
                    state.g_at_f()[i] / fx * fb / std_normal_pdf(t)
                }
            })
            .collect();
        let mut ratio_g = Vec::with_capacity(state.n_g());
        let mut weight_g = Vec::with_capacity(state.n_g());
        for (j, y) in state.g_rows().enumerate() {
            let t = dot(&b, y);
            let gb = std_normal_pdf(t);
            let fb = kde.pdf_1d(t);
            let fy = state.f_at_g()[j];
            let dropped = gb < theta_1 || (cfg.drop_g_on_f_estimates && (fy < theta_d || fb < theta_1));
            if dropped {
                ratio_g.push(f64::NAN);
                weight_g.push(f64::NAN);
            } else {
                let w = fb / gb;
                ratio_g.push(state.g_at_g()[j] / fy.max(FLOOR) * w);
                weight_g.push(w);
            }
        }
        Ok(ProjectionTerms { direction: b, kde, ratio_f, ratio_g, weight_g })
    }

    pub fn kde(&self) -> &KernelDensity {
        &self.kde
    }
}

/// The dual criterion for a pair (b, a):
/// M(b, a, x) = ∫ φ′(r_b) g f_{a}/g_{a} − φ*(φ′(r_b(x))),
/// whose f-sample mean estimates D_φ(g f_b/g_b, f) when b = a.
///
/// The integral term is the g-sample average of φ′(r_b(Y)) f_{a,n}/g_a(Y),
/// computed once at construction.
#[derive(Debug, Clone)]
pub struct DualCriterion {
    b: ProjectionTerms,
    integral: f64,
    conj_f: Vec<f64>,
    integrand_g: Vec<f64>,
}

impl DualCriterion {
    pub fn new(state: &PursuitState, b: &[f64], a: &[f64]) -> Result<Self> {
        let tb = ProjectionTerms::new(state, b)?;
        if unit_canonical(a)? == tb.direction {
            let ta = tb.clone();
            return Self::from_terms(state, tb, &ta);
        }
        let ta = ProjectionTerms::new(state, a)?;
        Self::from_terms(state, tb, &ta)
    }

    pub fn from_terms(state: &PursuitState, b: ProjectionTerms, a: &ProjectionTerms) -> Result<Self> {
        let spec = state.spec();
        let mut integrand_g = Vec::with_capacity(b.ratio_g.len());
        for (r, w) in b.ratio_g.iter().zip(&a.weight_g) {
            if r.is_finite() && w.is_finite() {
                integrand_g.push(spec.phi_prime(*r)? * w);
            }
        }
        let mut conj_f = Vec::with_capacity(b.ratio_f.len());
        for r in b.ratio_f.iter().filter(|r| r.is_finite()) {
            conj_f.push(spec.phi_star_of_prime(*r)?);
        }
        let survivors = conj_f.len().min(integrand_g.len());
        if survivors < 10 {
            return Err(Error::OverTruncation { survivors, threshold: state.threshold(1) });
        }
        let integral = crate::stats::mean(&integrand_g);
        Ok(DualCriterion { b, integral, conj_f, integrand_g })
    }

    pub fn direction(&self) -> &[f64] {
        &self.b.direction
    }

    /// The x-independent part of M(b, a, ·).
    pub fn integral_term(&self) -> f64 {
        self.integral
    }

    /// P_n M(b, a): the f-sample mean of M(b, a, X_i).
    pub fn value(&self) -> f64 {
        self.integral - crate::stats::mean(&self.conj_f)
    }

    /// M(b, a, X_i) at the retained f-sample points.
    pub fn m_values(&self) -> Vec<f64> {
        self.conj_f.iter().map(|c| self.integral - c).collect()
    }

    /// Number of f-sample points entering the average.
    pub fn n_used(&self) -> usize {
        self.conj_f.len()
    }

    pub fn n_g_used(&self) -> usize {
        self.integrand_g.len()
    }

    /// Sample variance of M(b, a, X_i), plus the g-sample variance of the
    /// integral term rescaled to the f-sample size when `two_sample` is set.
    pub fn variance(&self, two_sample: bool) -> f64 {
        let vx = variance(&self.conj_f);
        if two_sample {
            vx + variance(&self.integrand_g) * self.conj_f.len() as f64 / self.integrand_g.len() as f64
        } else {
            vx
        }
    }

    /// M(b, a, x) at an arbitrary point, with kernel estimates over the full
    /// f-sample.
    pub fn m_term(&self, state: &PursuitState, x: &[f64]) -> Result<f64> {
        if x.len() != state.dim() {
            return Err(Error::Dimension { expected: state.dim(), found: x.len() });
        }
        let (theta_d, theta_1) = (state.threshold(state.dim()), state.threshold(1));
        let fx = state.f_kde().pdf(x);
        if fx < 0.5 * theta_d {
            return Err(Error::TruncationViolation { value: fx, threshold: theta_d });
        }
        let t = dot(&self.b.direction, x);
        let fb = self.b.kde.pdf_1d(t);
        if fb < 0.5 * theta_1 {
            return Err(Error::TruncationViolation { value: fb, threshold: theta_1 });
        }
        let r = state.pdf(x) / fx * fb / std_normal_pdf(t);
        Ok(self.integral - state.spec().phi_star_of_prime(r)?)
    }
}

/// M(b, a, x) for the current state.
pub fn m_term(state: &PursuitState, b: &[f64], a: &[f64], x: &[f64]) -> Result<f64> {
    DualCriterion::new(state, b, a)?.m_term(state, x)
}

/// B₁(n, a) − B₂(n, a), the dual estimate of D_φ(g^(k−1) f_a / g^(k−1)_a, f).
pub fn empirical_divergence(state: &PursuitState, a: &[f64]) -> Result<f64> {
    Ok(DualCriterion::new(state, a, a)?.value())
}
