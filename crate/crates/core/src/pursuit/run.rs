use nalgebra::DMatrix;
use rand::Rng;

use super::{find_direction, DualCriterion, PursuitConfig, PursuitMode, PursuitState};
use crate::densities::Whitening;
use crate::divergence::PhiSpec;
use crate::error::{Error, Result};
use crate::gof::{copula_factorization, ellipsoid_member, p_value, Factorization, TestReport, TestSettings};

/// Result of a complete pursuit: one test report per step.
#[derive(Debug, Clone)]
pub struct PursuitOutcome {
    pub mode: PursuitMode,
    pub spec: PhiSpec,
    pub reports: Vec<TestReport>,
    pub whitening: Whitening,
    /// Rows of the input data.
    pub original_size: usize,
    /// Rows of the f-sample left after the initial truncation.
    pub truncated_size: usize,
    /// The state after the last update, holding g^(d−1) and all d−1 steps
    /// before the final forced direction.
    pub final_state: PursuitState,
}

impl PursuitOutcome {
    /// Acceptance at the last step.
    pub fn verdict(&self) -> bool {
        self.reports.last().is_some_and(|r| r.accepted)
    }

    pub fn factorization(&self) -> Factorization {
        copula_factorization(&self.reports)
    }

    /// Columns are the discovered directions in whitened coordinates.
    pub fn basis_whitened(&self) -> DMatrix<f64> {
        let d = self.reports.len();
        DMatrix::from_fn(d, d, |i, j| self.reports[j].direction_whitened[i])
    }

    /// Columns are the discovered directions as covectors of the input
    /// coordinates.
    pub fn basis_original(&self) -> DMatrix<f64> {
        let d = self.reports.len();
        DMatrix::from_fn(d, d, |i, j| self.reports[j].direction[i])
    }
}

/// Whitens `data`, then for k = 1..d finds ǎ_k, tests it against 𝓔_k and
/// multiplies the instrumental density by the ratio along ǎ_k.
pub fn run_pursuit<R: Rng + ?Sized>(
    data: &DMatrix<f64>,
    mode: PursuitMode,
    spec: PhiSpec,
    settings: &TestSettings,
    config: &PursuitConfig,
    rng: &mut R,
) -> Result<PursuitOutcome> {
    let (m, d) = data.shape();
    if d == 0 || m <= d {
        return Err(Error::DegenerateSample(format!("{m} rows for dimension {d}")));
    }
    settings.validate()?;
    let (whitening, white) = match mode {
        PursuitMode::Elliptical => Whitening::full(data)?,
        PursuitMode::Independence => Whitening::diagonal(data)?,
    };
    let q = settings.q_alpha();
    let mut state = PursuitState::new(&white, spec, *config, rng)?;
    let truncated_size = state.n_f();
    let mut reports = Vec::with_capacity(d);
    for k in 1..=d {
        let search = find_direction(&state, &config.optimizer, rng)?;
        let a = search.direction;
        let report = match DualCriterion::new(&state, &a, &a) {
            Ok(crit) => {
                let n = crit.n_used();
                let value = crit.value();
                let variance = crit.variance(config.two_sample_variance);
                if !(variance > 0.0) && value != 0.0 {
                    return Err(Error::DegenerateVariance);
                }
                let statistic = if value == 0.0 { 0.0 } else { value / variance.sqrt() };
                let z = statistic * (n as f64).sqrt();
                let threshold = q / (n as f64).sqrt();
                TestReport {
                    step_index: k,
                    direction: whitening.covector_to_original(&a),
                    direction_whitened: a.clone(),
                    divergence_estimate: value,
                    statistic,
                    z_score: z,
                    variance,
                    threshold,
                    accepted: ellipsoid_member(statistic, threshold),
                    p_value: p_value(z),
                    mode,
                    sample_size: n,
                    degraded: search.degraded,
                }
            }
            Err(Error::OverTruncation { .. }) => {
                let n = state.n_f();
                TestReport {
                    step_index: k,
                    direction: whitening.covector_to_original(&a),
                    direction_whitened: a.clone(),
                    divergence_estimate: f64::INFINITY,
                    statistic: f64::INFINITY,
                    z_score: f64::INFINITY,
                    variance: f64::NAN,
                    threshold: q / (n as f64).sqrt(),
                    accepted: false,
                    p_value: 0.0,
                    mode,
                    sample_size: n,
                    degraded: true,
                }
            }
            Err(e) => return Err(e),
        };
        reports.push(report);
        if k < d {
            state = state.update(&a, rng)?;
        }
    }
    Ok(PursuitOutcome { mode, spec, reports, whitening, original_size: m, truncated_size, final_state: state })
}
