//! Goodness-of-fit tests built on the pursuit.
//!
//! At step k the hypothesis that the direction ǎ_k carries no structure
//! beyond g^(k−1) is accepted when the normalized dual estimate lies inside
//! 𝓔_k = { b : P_n M(b, b) / √Var̂ ≤ q_α / √n }. Running the elliptical
//! pursuit and accepting at the last step means the copula of `f` equals
//! that of the fitted Gaussian in the discovered basis; the independence
//! pursuit does the same for the product copula.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaGrid, EmpiricalCopula};
use crate::divergence::PhiSpec;
use crate::error::{Error, Result};
use crate::pursuit::{run_pursuit, DualCriterion, PursuitConfig, PursuitMode, PursuitOutcome, PursuitState};
use crate::stats::{std_normal_quantile, std_normal_sf};

/// Literal q_α for α = 0.9 in `QMode::Paper`; Φ⁻¹(0.9) itself is 1.2816.
pub const LITERAL_Q_090: f64 = 0.2533;

/// How q_α is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    /// 0.2533 at α = 0.9, the standard normal quantile otherwise.
    #[default]
    Paper,
    /// Always the standard normal quantile Φ⁻¹(α).
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestSettings {
    pub alpha: f64,
    pub q_mode: QMode,
}

impl Default for TestSettings {
    fn default() -> Self {
        TestSettings { alpha: 0.9, q_mode: QMode::Paper }
    }
}

impl TestSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain { what: "alpha", value: self.alpha });
        }
        Ok(())
    }

    pub fn q_alpha(&self) -> f64 {
        match self.q_mode {
            QMode::Paper if (self.alpha - 0.9).abs() < 1e-12 => LITERAL_Q_090,
            _ => std_normal_quantile(self.alpha),
        }
    }
}

/// Outcome of the test at one pursuit step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// 1-based step index k.
    pub step_index: usize,
    /// ǎ_k as a unit covector in the coordinates of the input data.
    pub direction: Vec<f64>,
    pub direction_whitened: Vec<f64>,
    /// P_n M(ǎ_k, ǎ_k), the dual divergence estimate.
    pub divergence_estimate: f64,
    /// P_n M / √Var̂, compared against `threshold`.
    pub statistic: f64,
    /// √n · statistic, asymptotically standard normal under the null.
    pub z_score: f64,
    pub variance: f64,
    /// q_α / √n.
    pub threshold: f64,
    pub accepted: bool,
    pub p_value: f64,
    pub mode: PursuitMode,
    pub sample_size: usize,
    /// The direction search ended without a usable improvement.
    pub degraded: bool,
}

/// The normalized statistic √n P_n M(b, b) / √Var̂ and the variance Var̂.
pub fn test_statistic(state: &PursuitState, b: &[f64]) -> Result<(f64, f64)> {
    let crit = DualCriterion::new(state, b, b)?;
    let n = crit.n_used();
    if n < 20 {
        return Err(Error::DegenerateSample(format!("{n} retained points; the test needs 20")));
    }
    let var = crit.variance(state.config().two_sample_variance);
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let value = crit.value();
    Ok((value / (var / n as f64).sqrt(), var))
}

pub fn ellipsoid_threshold(n: usize, q_alpha: f64) -> f64 {
    q_alpha / (n.max(1) as f64).sqrt()
}

pub fn ellipsoid_member(statistic: f64, threshold: f64) -> bool {
    statistic <= threshold
}

/// Two-sided p-value 2(1 − Φ(|z|)).
pub fn p_value(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    (2.0 * std_normal_sf(z.abs())).min(1.0)
}

/// Runs the pursuit in elliptical mode; the verdict is acceptance at the
/// last step.
pub fn elliptical_copula_test<R: Rng + ?Sized>(
    data: &DMatrix<f64>,
    spec: PhiSpec,
    settings: &TestSettings,
    config: &PursuitConfig,
    rng: &mut R,
) -> Result<(PursuitOutcome, bool)> {
    let out = run_pursuit(data, PursuitMode::Elliptical, spec, settings, config, rng)?;
    let verdict = out.verdict();
    Ok((out, verdict))
}

/// Runs the pursuit in independence mode; the verdict is acceptance at the
/// last step.
pub fn independence_test<R: Rng + ?Sized>(
    data: &DMatrix<f64>,
    spec: PhiSpec,
    settings: &TestSettings,
    config: &PursuitConfig,
    rng: &mut R,
) -> Result<(PursuitOutcome, bool)> {
    let out = run_pursuit(data, PursuitMode::Independence, spec, settings, config, rng)?;
    let verdict = out.verdict();
    Ok((out, verdict))
}

/// Block decomposition of the copula density in the basis {ǎ_1, …, ǎ_d}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    /// Consecutive 1-based step indices; the copula density is the product
    /// of the copula densities of the blocks.
    pub blocks: Vec<Vec<usize>>,
    /// Every step accepted: the copula density is identically 1.
    pub flat: bool,
}

impl Factorization {
    /// Product of per-block empirical copula densities of `sample · basis`
    /// on an m^d lattice. Singleton blocks contribute the factor 1.
    pub fn block_product_grid(&self, sample: &DMatrix<f64>, basis: &DMatrix<f64>, m: usize) -> Result<CopulaGrid> {
        let d = sample.ncols();
        if basis.shape() != (d, d) {
            return Err(Error::Dimension { expected: d, found: basis.ncols() });
        }
        if m == 0 {
            return Err(Error::InvalidParameter("grid resolution must be positive".into()));
        }
        let y = sample * basis;
        let axis: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let mut grid = CopulaGrid { dim: d, axis, values: vec![1.0; m.pow(d as u32)] };
        for block in self.blocks.iter().filter(|b| b.len() > 1) {
            let cols: Vec<usize> = block.iter().map(|k| k - 1).collect();
            let sub = DMatrix::from_fn(y.nrows(), cols.len(), |i, j| y[(i, cols[j])]);
            let est = EmpiricalCopula::fit(&sub)?;
            let block_grid = est.grid(m)?;
            for (k, v) in grid.values.iter_mut().enumerate() {
                let mut flat = 0;
                let mut rest = k;
                let mut idx = vec![0; d];
                for slot in idx.iter_mut().rev() {
                    *slot = rest % m;
                    rest /= m;
                }
                for &c in &cols {
                    flat = flat * m + idx[c];
                }
                *v *= block_grid.values[flat];
            }
        }
        Ok(grid)
    }
}

/// Cuts the index set 1..d after every accepted step before the last.
pub fn copula_factorization(reports: &[TestReport]) -> Factorization {
    let d = reports.len();
    let mut blocks = Vec::new();
    let mut current = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        current.push(i + 1);
        if r.accepted && i + 1 < d {
            blocks.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    Factorization { blocks, flat: d > 0 && reports.iter().all(|r| r.accepted) }
}
