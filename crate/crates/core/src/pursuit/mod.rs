//! The projection pursuit engine.
//!
//! Starting from a Gaussian instrumental density `g` fitted to the data, each
//! step looks for the direction `a` minimizing the dual estimate of
//! D_φ(g^(k−1) f_a / g^(k−1)_a, f) and multiplies `g^(k−1)` by the ratio of
//! the projected kernel estimate to the projected instrumental density.
//!
//! All computations happen in whitened coordinates, where `g` is the standard
//! normal. Directions are kept orthonormal there, so every projection of the
//! current `g^(k)` onto a fresh direction is exactly N(0, 1) and the update
//! and sampling steps need no further estimation.

mod criterion;
mod run;
mod search;
mod state;
mod truncation;

pub use criterion::{empirical_divergence, m_term, DualCriterion, ProjectionTerms};
pub use run::{run_pursuit, PursuitOutcome};
pub use search::{criterion_sup_inf, find_direction, SearchResult};
pub use state::{state_sample, update_state, PursuitState, Step};
pub use truncation::{truncate, TruncationRule};

use serde::{Deserialize, Serialize};

/// Which instrumental density the pursuit starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PursuitMode {
    /// Gaussian with the full sample covariance; tests for an elliptical copula.
    Elliptical,
    /// Gaussian with the diagonal of the sample covariance; tests for independence.
    Independence,
}

/// Simulated annealing followed by Nelder–Mead refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub proposals: usize,
    pub cooling: f64,
    pub step: f64,
    /// Random directions used to pick the start and the initial temperature.
    pub initial_directions: usize,
    pub nelder_mead_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            proposals: 500,
            cooling: 0.95,
            step: 0.3,
            initial_directions: 20,
            nelder_mead_iterations: 100,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) || !(self.step > 0.0) || self.initial_directions == 0 {
            return Err(crate::Error::InvalidParameter(format!("bad optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// Estimator settings for the dual criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PursuitConfig {
    pub truncation: TruncationRule,
    pub optimizer: OptimizerConfig,
    /// Evaluate kernel estimates built on the f-sample at its own points
    /// without the point's own kernel.
    pub leave_one_out: bool,
    /// Add the Monte-Carlo variance of the g-sample average to the variance
    /// of the test statistic.
    pub two_sample_variance: bool,
    /// Also drop g-sample points whose kernel estimates of `f` fall below the
    /// truncation threshold.
    pub drop_g_on_f_estimates: bool,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        PursuitConfig {
            truncation: TruncationRule::default(),
            optimizer: OptimizerConfig::default(),
            leave_one_out: true,
            two_sample_variance: true,
            drop_g_on_f_estimates: true,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit vector with the first nonzero component positive.
pub(crate) fn unit_canonical(a: &[f64]) -> crate::Result<Vec<f64>> {
    let norm = dot(a, a).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(crate::Error::InvalidParameter("direction must be a nonzero finite vector".into()));
    }
    let unit: Vec<f64> = a.iter().map(|c| c / norm).collect();
    Ok(crate::densities::canonical_sign(&unit))
}
