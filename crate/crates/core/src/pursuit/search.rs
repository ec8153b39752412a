use std::cell::Cell;

use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{dot, unit_canonical, DualCriterion, OptimizerConfig, ProjectionTerms, PursuitState};
use crate::error::{Error, Result};

/// Outcome of a search over the unit sphere of the free subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// Unit vector in whitened coordinates, first nonzero component positive.
    pub direction: Vec<f64>,
    /// Objective at `direction`, in the objective's own orientation (the
    /// minimum for `find_direction`, the maximum for `criterion_sup_inf`).
    pub value: f64,
    pub evaluations: usize,
    /// Set when no finite value was found or the search never improved on
    /// its best starting candidate.
    pub degraded: bool,
}

/// Objective on coordinates in the free subspace; the direction is the
/// normalized combination of the basis vectors.
struct SphereObjective<'a, F: Fn(&[f64]) -> f64> {
    basis: &'a [Vec<f64>],
    f: F,
    calls: Cell<usize>,
}

impl<F: Fn(&[f64]) -> f64> SphereObjective<'_, F> {
    fn direction(&self, v: &[f64]) -> Option<Vec<f64>> {
        let dim = self.basis[0].len();
        let mut x = vec![0.0; dim];
        for (c, b) in v.iter().zip(self.basis) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
        }
        unit_canonical(&x).ok()
    }

    fn eval(&self, v: &[f64]) -> f64 {
        self.calls.set(self.calls.get() + 1);
        match self.direction(v) {
            Some(x) => {
                let y = (self.f)(&x);
                if y.is_nan() {
                    f64::INFINITY
                } else {
                    y
                }
            }
            None => f64::INFINITY,
        }
    }
}

impl<F: Fn(&[f64]) -> f64> CostFunction for &SphereObjective<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(p))
    }
}

fn random_unit<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..r).map(|_| StandardNormal.sample(rng)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Minimizes `f` over unit vectors spanned by `basis`.
///
/// Annealing: the best of `initial_directions` random starts is perturbed by
/// normalize(v + step·N(0, I)); the temperature starts at the standard
/// deviation of the starting values and is multiplied by `cooling` after
/// every proposal. Nelder–Mead then refines the best point found.
fn minimize_on_sphere<R, F>(basis: &[Vec<f64>], f: F, opt: &OptimizerConfig, rng: &mut R) -> Result<SearchResult>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    opt.validate()?;
    let r = basis.len();
    if r == 0 {
        return Err(Error::Constraint("no free direction left to search".into()));
    }
    let obj = SphereObjective { basis, f, calls: Cell::new(0) };
    if r == 1 {
        let value = obj.eval(&[1.0]);
        let direction = obj.direction(&[1.0]).expect("basis vectors are unit");
        return Ok(SearchResult { direction, value, evaluations: 1, degraded: !value.is_finite() });
    }

    let starts: Vec<(Vec<f64>, f64)> = (0..opt.initial_directions)
        .map(|_| {
            let v = random_unit(r, rng);
            let y = obj.eval(&v);
            (v, y)
        })
        .collect();
    let finite: Vec<f64> = starts.iter().map(|s| s.1).filter(|y| y.is_finite()).collect();
    let (mut cur, mut cur_y) = starts.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned().expect("at least one start");
    let start_best = cur_y;
    let spread = crate::stats::variance(&finite).sqrt();
    let mut temp = if spread > 0.0 && spread.is_finite() { spread } else { 1e-3 * cur_y.abs().max(1.0) };
    let (mut best, mut best_y) = (cur.clone(), cur_y);

    for _ in 0..opt.proposals {
        let mut cand: Vec<f64> =
            cur.iter().map(|c| c + opt.step * Distribution::<f64>::sample(&StandardNormal, rng)).collect();
        let n = dot(&cand, &cand).sqrt();
        if n > 1e-12 {
            cand.iter_mut().for_each(|c| *c /= n);
        }
        let y = obj.eval(&cand);
        let accept = y <= cur_y || (y.is_finite() && rng.random::<f64>() < (-(y - cur_y) / temp).exp());
        if accept {
            cur = cand;
            cur_y = y;
            if cur_y < best_y {
                best = cur.clone();
                best_y = cur_y;
            }
        }
        temp *= opt.cooling;
    }

    if opt.nelder_mead_iterations > 0 && best_y.is_finite() {
        let mut simplex = vec![best.clone()];
        for i in 0..r {
            let mut v = best.clone();
            v[i] += 0.1;
            simplex.push(v);
        }
        let solver =
            NelderMead::new(simplex).with_sd_tolerance(1e-10).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let res = Executor::new(&obj, solver)
            .configure(|s| s.max_iters(opt.nelder_mead_iterations as u64))
            .run()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let state = res.state();
        let aborted = matches!(state.get_termination_reason(), Some(TerminationReason::SolverExit(_)));
        if let (Some(p), false) = (state.get_best_param(), aborted) {
            let y = state.get_best_cost();
            if y < best_y {
                best = p.clone();
                best_y = y;
            }
        }
    }

    let direction =
        obj.direction(&best).ok_or_else(|| Error::Constraint("search collapsed to the zero vector".into()))?;
    Ok(SearchResult {
        direction,
        value: best_y,
        evaluations: obj.calls.get(),
        degraded: !best_y.is_finite() || best_y >= start_best,
    })
}

/// The estimated direction ǎ_k: minimizer of the dual divergence estimate
/// over unit vectors orthogonal to the directions already in `state`.
pub fn find_direction<R: Rng + ?Sized>(
    state: &PursuitState,
    opt: &OptimizerConfig,
    rng: &mut R,
) -> Result<SearchResult> {
    let basis = state.complement_basis();
    minimize_on_sphere(
        &basis,
        |a| match DualCriterion::new(state, a, a) {
            Ok(c) => c.value(),
            Err(_) => f64::INFINITY,
        },
        opt,
        rng,
    )
}

/// The inner maximizer c ↦ P_n M(c, a) for a fixed `a`, and its value.
///
/// The diagonal point c = a is always a candidate, so the returned value is
/// never below P_n M(a, a).
pub fn criterion_sup_inf<R: Rng + ?Sized>(
    state: &PursuitState,
    a: &[f64],
    opt: &OptimizerConfig,
    rng: &mut R,
) -> Result<SearchResult> {
    let ta = ProjectionTerms::new(state, a)?;
    let diagonal = DualCriterion::from_terms(state, ta.clone(), &ta)?.value();
    let basis = state.complement_basis();
    let neg = |c: &[f64]| match ProjectionTerms::new(state, c).and_then(|tc| DualCriterion::from_terms(state, tc, &ta))
    {
        Ok(m) => -m.value(),
        Err(_) => f64::INFINITY,
    };
    let mut res = minimize_on_sphere(&basis, neg, opt, rng)?;
    res.value = -res.value;
    if !(res.value >= diagonal) {
        res.direction = ta.direction.clone();
        res.value = diagonal;
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::PhiSpec;
    use crate::pursuit::PursuitConfig;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b).abs().min(1.0).acos().to_degrees()
    }

    #[test]
    fn sphere_minimizer_finds_a_quadratic_minimum() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let target = [0.48, 0.6, 0.64];
        let f = |x: &[f64]| 1.0 - dot(x, &target).powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let res = minimize_on_sphere(&basis, f, &OptimizerConfig::default(), &mut rng).unwrap();
        assert!(angle_deg(&res.direction, &target) < 0.5, "{:?}", res.direction);
        assert!(res.value < 1e-4);
        assert!(res.evaluations > 500);
        assert!(!res.degraded);
    }

    #[test]
    fn failures_count_as_infinite() {
        let basis = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let f = |x: &[f64]| if x[0] > 0.9 { f64::NAN } else { -x[1].abs() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let res = minimize_on_sphere(&basis, f, &OptimizerConfig::default(), &mut rng).unwrap();
        assert!(res.value.is_finite());
        assert!(res.direction[0] <= 0.9);
    }

    #[test]
    fn all_failures_are_flagged() {
        let basis = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let res = minimize_on_sphere(&basis, |_| f64::NAN, &OptimizerConfig::default(), &mut rng).unwrap();
        assert!(res.degraded);
    }

    #[test]
    fn one_dimensional_search_returns_plus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DMatrix::from_fn(200, 1, |i, _| ((i as f64 + 0.5) / 200.0 - 0.5) * 3.0);
        let white = crate::densities::whiten(&x).unwrap().1;
        let s = PursuitState::new(&white, PhiSpec::ChiSquare, PursuitConfig::default(), &mut rng).unwrap();
        let res = find_direction(&s, &OptimizerConfig::default(), &mut rng).unwrap();
        assert_eq!(res.direction, vec![1.0]);
        assert_eq!(res.evaluations, 1);
    }

    #[test]
    fn last_free_direction_is_forced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = crate::datasets::SimulationDesign::SIM1.sample(200, &mut rng).unwrap();
        let white = crate::densities::whiten(&raw).unwrap().1;
        let s = PursuitState::new(&white, PhiSpec::ChiSquare, PursuitConfig::default(), &mut rng).unwrap();
        let s = s.update(&[0.6, 0.8], &mut rng).unwrap();
        let res = find_direction(&s, &OptimizerConfig::default(), &mut rng).unwrap();
        assert!(dot(&res.direction, &[0.6, 0.8]).abs() < 1e-12);
        assert!(angle_deg(&res.direction, &[0.8, -0.6]) < 1e-6);
    }

    #[test]
    fn search_is_deterministic_and_beats_random_starts() {
        let raw = {
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            crate::datasets::SimulationDesign::SIM1.sample(200, &mut rng).unwrap()
        };
        let white = crate::densities::whiten(&raw).unwrap().1;
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(60);
            let s = PursuitState::new(&white, PhiSpec::ChiSquare, PursuitConfig::default(), &mut rng).unwrap();
            let res = find_direction(&s, &OptimizerConfig::default(), &mut rng).unwrap();
            (s, res)
        };
        let (s, first) = run();
        assert_eq!(first, run().1);
        for k in 0..36 {
            let t = (k as f64 * 5.0).to_radians();
            if let Ok(v) = crate::pursuit::empirical_divergence(&s, &[t.cos(), t.sin()]) {
                assert!(first.value <= v + 1e-9, "{} > {v} at {k}", first.value);
            }
        }
    }

    #[test]
    fn sup_dominates_the_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let raw = crate::datasets::SimulationDesign::SIM1.sample(150, &mut rng).unwrap();
        let white = crate::densities::whiten(&raw).unwrap().1;
        let s = PursuitState::new(&white, PhiSpec::KullbackLeibler, PursuitConfig::default(), &mut rng).unwrap();
        for a in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
            let diag = crate::pursuit::empirical_divergence(&s, &a).unwrap();
            let res = criterion_sup_inf(&s, &a, &OptimizerConfig::default(), &mut rng).unwrap();
            assert!(res.value >= diag - 1e-9);
        }
    }

    #[test]
    fn null_sup_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = DMatrix::<f64>::from_fn(5000, 2, |_, _| StandardNormal.sample(&mut rng));
        let g = DMatrix::<f64>::from_fn(5000, 2, |_, _| StandardNormal.sample(&mut rng));
        let cfg = PursuitConfig::default();
        let (f, g) = crate::pursuit::truncate(&f, &g, &cfg.truncation).unwrap();
        let s = PursuitState::with_samples(&f, &g, PhiSpec::ChiSquare, cfg).unwrap();
        let opt =
            OptimizerConfig { proposals: 60, initial_directions: 8, nelder_mead_iterations: 20, ..Default::default() };
        let res = criterion_sup_inf(&s, &[0.6, 0.8], &opt, &mut rng).unwrap();
        assert!(res.value.abs() < 0.05, "{}", res.value);
    }
}
