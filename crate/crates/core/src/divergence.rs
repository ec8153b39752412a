//! The φ-divergence family.
//!
//! A [`PhiSpec`] names a convex function φ with φ(1) = 0. Besides φ itself it
//! exposes the derivative φ′ and the composition x ↦ φ*(φ′(x)) that appears in
//! the dual representation of D_φ. [`divergence_numeric`] integrates
//! D_φ(Q, P) = ∫ φ(q/p) p on a rectangular grid and serves as the reference
//! against which sample-based estimates are checked.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A divergence kernel φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PhiSpec {
    /// φ(x) = x ln x − x + 1.
    KullbackLeibler,
    /// φ(x) = ½(x − 1)².
    ChiSquare,
    /// φ(x) = 2(√x − 1)².
    Hellinger,
    /// φ(x) = (x^γ − γx + γ − 1) / (γ(γ − 1)).
    Power { gamma: f64 },
    /// φ(x) = |x − 1|.
    L1,
}

impl PhiSpec {
    /// Builds a power divergence, accepting γ = −1 or γ in [2, 8].
    pub fn power(gamma: f64) -> Result<Self> {
        let spec = PhiSpec::Power { gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PhiSpec::Power { gamma } if !(gamma == -1.0 || (2.0..=8.0).contains(&gamma)) => Err(
                Error::InvalidParameter(format!("power divergence needs gamma = -1 or 2 <= gamma <= 8, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }

    /// Every family shipped by the crate, with a representative power member.
    pub fn all() -> [PhiSpec; 6] {
        [
            PhiSpec::KullbackLeibler,
            PhiSpec::ChiSquare,
            PhiSpec::Hellinger,
            PhiSpec::Power { gamma: 3.0 },
            PhiSpec::Power { gamma: -1.0 },
            PhiSpec::L1,
        ]
    }

    /// Whether φ′ exists everywhere on (0, ∞).
    pub fn is_smooth(&self) -> bool {
        !matches!(self, PhiSpec::L1)
    }

    /// φ(x). At x = 0 the continuous limit is returned (infinite for γ = −1).
    pub fn phi(&self, x: f64) -> Result<f64> {
        check_domain("phi", x)?;
        Ok(match *self {
            PhiSpec::KullbackLeibler => {
                if x == 0.0 {
                    1.0
                } else {
                    x * x.ln() - x + 1.0
                }
            }
            PhiSpec::ChiSquare => 0.5 * (x - 1.0) * (x - 1.0),
            PhiSpec::Hellinger => {
                let s = x.sqrt() - 1.0;
                2.0 * s * s
            }
            PhiSpec::Power { gamma } => {
                if x == 0.0 && gamma < 0.0 {
                    f64::INFINITY
                } else {
                    (x.powf(gamma) - gamma * x + gamma - 1.0) / (gamma * (gamma - 1.0))
                }
            }
            PhiSpec::L1 => (x - 1.0).abs(),
        })
    }

    /// φ′(x). Undefined for L1.
    pub fn phi_prime(&self, x: f64) -> Result<f64> {
        check_domain("phi_prime", x)?;
        Ok(match *self {
            PhiSpec::KullbackLeibler => x.ln(),
            PhiSpec::ChiSquare => x - 1.0,
            PhiSpec::Hellinger => 2.0 * (1.0 - 1.0 / x.sqrt()),
            PhiSpec::Power { gamma } => (x.powf(gamma - 1.0) - 1.0) / (gamma - 1.0),
            PhiSpec::L1 => return Err(Error::UnsupportedDivergence("L1")),
        })
    }

    /// φ*(φ′(x)), which by the Legendre identity equals x φ′(x) − φ(x).
    pub fn phi_star_of_prime(&self, x: f64) -> Result<f64> {
        check_domain("phi_star_of_prime", x)?;
        Ok(match *self {
            PhiSpec::KullbackLeibler => x - 1.0,
            PhiSpec::ChiSquare => 0.5 * (x * x - 1.0),
            PhiSpec::Hellinger => 2.0 * (x.sqrt() - 1.0),
            PhiSpec::Power { gamma } => (x.powf(gamma) - 1.0) / gamma,
            PhiSpec::L1 => return Err(Error::UnsupportedDivergence("L1")),
        })
    }
}

fn check_domain(what: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value: x })
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiSpec::KullbackLeibler => f.write_str("kl"),
            PhiSpec::ChiSquare => f.write_str("chi2"),
            PhiSpec::Hellinger => f.write_str("hellinger"),
            PhiSpec::Power { gamma } => write!(f, "power:{gamma}"),
            PhiSpec::L1 => f.write_str("l1"),
        }
    }
}

impl FromStr for PhiSpec {
    type Err = Error;

    /// Parses `kl`, `chi2`, `hellinger`, `l1` or `power:G`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "kl" | "kullback-leibler" => Ok(PhiSpec::KullbackLeibler),
            "chi2" | "chisquare" => Ok(PhiSpec::ChiSquare),
            "hellinger" => Ok(PhiSpec::Hellinger),
            "l1" => Ok(PhiSpec::L1),
            other => {
                let gamma = other
                    .strip_prefix("power:")
                    .and_then(|g| g.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown divergence `{s}`")))?;
                PhiSpec::power(gamma)
            }
        }
    }
}

/// φ(x) for the given family.
pub fn phi_eval(spec: PhiSpec, x: f64) -> Result<f64> {
    spec.phi(x)
}

/// x ↦ φ*(φ′(x)) for the given family.
pub fn phi_star_of_prime(spec: PhiSpec, x: f64) -> Result<f64> {
    spec.phi_star_of_prime(x)
}

/// One axis of a midpoint quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Axis {
    fn step(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    fn midpoint(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.step()
    }
}

/// A tensor-product grid of cell midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one axis".into()));
        }
        for a in &axes {
            if a.cells == 0 || !(a.hi > a.lo) {
                return Err(Error::InvalidParameter(format!("bad grid axis {a:?}")));
            }
        }
        Ok(Grid { axes })
    }

    /// 1-D grid spanning `mean ± 8 sd` with step `1e-3 · sd`.
    pub fn covering_1d(mean: f64, sd: f64) -> Self {
        Grid { axes: vec![Axis { lo: mean - 8.0 * sd, hi: mean + 8.0 * sd, cells: 16_000 }] }
    }

    /// 400 × 400 grid spanning eight marginal standard deviations each way.
    pub fn covering_2d(mean: [f64; 2], sd: [f64; 2]) -> Self {
        Grid {
            axes: (0..2).map(|j| Axis { lo: mean[j] - 8.0 * sd[j], hi: mean[j] + 8.0 * sd[j], cells: 400 }).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.cells).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits every node in row-major order (last axis fastest).
    pub fn for_each_node(&self, mut visit: impl FnMut(usize, &[f64])) {
        let d = self.axes.len();
        let mut idx = vec![0usize; d];
        let mut x: Vec<f64> = self.axes.iter().map(|a| a.midpoint(0)).collect();
        for node in 0..self.len() {
            visit(node, &x);
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < self.axes[j].cells {
                    x[j] = self.axes[j].midpoint(idx[j]);
                    break;
                }
                idx[j] = 0;
                x[j] = self.axes[j].midpoint(0);
            }
        }
    }

    /// Midpoint-rule integral of `f`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut total = 0.0;
        self.for_each_node(|_, x| total += f(x));
        total * self.cell_volume()
    }
}

/// D_φ(Q, P) = ∫ φ(q/p) p by the midpoint rule on `grid`.
///
/// Nodes where both densities vanish contribute nothing; a node with p = 0
/// and q > 0 is an error because Q is then not dominated by P.
pub fn divergence_numeric<Q, P>(spec: PhiSpec, q: Q, p: P, grid: &Grid) -> Result<f64>
where
    Q: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> f64,
{
    spec.validate()?;
    let mut total = 0.0;
    let mut failure = None;
    grid.for_each_node(|node, x| {
        if failure.is_some() {
            return;
        }
        let (qx, px) = (q(x), p(x));
        if px <= 0.0 {
            if qx > 0.0 {
                failure = Some(Error::AbsoluteContinuity { node });
            }
            return;
        }
        match spec.phi(qx / px) {
            Ok(v) => total += v * px,
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(total * grid.cell_volume()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::std_normal_pdf;
    use proptest::prelude::*;

    const SMOOTH: [PhiSpec; 5] = [
        PhiSpec::KullbackLeibler,
        PhiSpec::ChiSquare,
        PhiSpec::Hellinger,
        PhiSpec::Power { gamma: 3.0 },
        PhiSpec::Power { gamma: -1.0 },
    ];

    fn normal(mu: f64) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| std_normal_pdf(x[0] - mu)
    }

    #[test]
    fn phi_eval_examples() {
        assert_eq!(phi_eval(PhiSpec::KullbackLeibler, 1.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((phi_eval(PhiSpec::KullbackLeibler, e).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(phi_eval(PhiSpec::ChiSquare, 3.0).unwrap(), 2.0);
        assert_eq!(phi_eval(PhiSpec::L1, 0.0).unwrap(), 1.0);
        assert!(matches!(phi_eval(PhiSpec::ChiSquare, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn phi_at_zero_is_the_limit() {
        assert_eq!(PhiSpec::KullbackLeibler.phi(0.0).unwrap(), 1.0);
        assert_eq!(PhiSpec::ChiSquare.phi(0.0).unwrap(), 0.5);
        assert_eq!(PhiSpec::Hellinger.phi(0.0).unwrap(), 2.0);
        assert_eq!(PhiSpec::L1.phi(0.0).unwrap(), 1.0);
        assert!((PhiSpec::Power { gamma: 4.0 }.phi(0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(PhiSpec::Power { gamma: -1.0 }.phi(0.0).unwrap().is_infinite());
    }

    #[test]
    fn phi_is_zero_at_one() {
        for spec in PhiSpec::all() {
            assert_eq!(spec.phi(1.0).unwrap(), 0.0, "{spec}");
        }
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(phi_star_of_prime(PhiSpec::KullbackLeibler, 1.0).unwrap(), 0.0);
        assert_eq!(phi_star_of_prime(PhiSpec::KullbackLeibler, 2.0).unwrap(), 1.0);
        assert_eq!(phi_star_of_prime(PhiSpec::ChiSquare, 2.0).unwrap(), 1.5);
        assert_eq!(phi_star_of_prime(PhiSpec::L1, 2.0), Err(Error::UnsupportedDivergence("L1")));
    }

    #[test]
    fn conjugate_identity_on_log_grid() {
        for spec in SMOOTH {
            for i in 0..=120 {
                let x = 10f64.powf(-3.0 + i as f64 * 0.05);
                let lhs = spec.phi_star_of_prime(x).unwrap();
                let rhs = x * spec.phi_prime(x).unwrap() - spec.phi(x).unwrap();
                let scale = 1.0_f64.max(lhs.abs());
                assert!((lhs - rhs).abs() <= 1e-12 * scale, "{spec} at {x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn power_gamma_range() {
        assert!(PhiSpec::power(-1.0).is_ok());
        assert!(PhiSpec::power(2.0).is_ok());
        assert!(PhiSpec::power(8.0).is_ok());
        assert!(PhiSpec::power(1.5).is_err());
        assert!(PhiSpec::power(0.5).is_err());
        assert!(PhiSpec::power(9.0).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for spec in PhiSpec::all() {
            assert_eq!(spec.to_string().parse::<PhiSpec>().unwrap(), spec);
        }
        assert_eq!("power:2.5".parse::<PhiSpec>().unwrap(), PhiSpec::Power { gamma: 2.5 });
        assert!("power:1".parse::<PhiSpec>().is_err());
        assert!("tv".parse::<PhiSpec>().is_err());
    }

    #[test]
    fn chi_square_dominates_l1_far_from_one() {
        for i in 0..200 {
            let x = 3.0 + i as f64 * 0.035;
            assert!(PhiSpec::ChiSquare.phi(x).unwrap() >= (x - 1.0).abs());
        }
    }

    #[test]
    fn numeric_kl_of_shifted_normals() {
        let grid = Grid::covering_1d(0.0, 1.0);
        let same = divergence_numeric(PhiSpec::KullbackLeibler, normal(0.0), normal(0.0), &grid).unwrap();
        assert!(same.abs() < 1e-9);
        let kl = divergence_numeric(PhiSpec::KullbackLeibler, normal(1.0), normal(0.0), &grid).unwrap();
        assert!((kl - 0.5).abs() < 1e-3, "{kl}");
        let chi2 = divergence_numeric(PhiSpec::ChiSquare, normal(1.0), normal(0.0), &grid).unwrap();
        assert!((chi2 - 0.85914).abs() < 1e-3, "{chi2}");
    }

    #[test]
    fn numeric_detects_missing_support() {
        let grid = Grid::new(vec![Axis { lo: -1.0, hi: 1.0, cells: 10 }]).unwrap();
        let p = |x: &[f64]| if x[0] > 0.0 { 1.0 } else { 0.0 };
        let q = |_: &[f64]| 0.5;
        assert!(matches!(divergence_numeric(PhiSpec::ChiSquare, q, p, &grid), Err(Error::AbsoluteContinuity { .. })));
    }

    #[test]
    fn positivity_for_distinct_densities() {
        let grid = Grid::covering_1d(0.0, 1.0);
        for spec in PhiSpec::all() {
            let d = divergence_numeric(spec, normal(0.3), normal(0.0), &grid).unwrap();
            assert!(d > 1e-6, "{spec}: {d}");
        }
    }

    #[test]
    fn grid_visits_row_major() {
        let grid = Grid::new(vec![Axis { lo: 0.0, hi: 2.0, cells: 2 }, Axis { lo: 0.0, hi: 3.0, cells: 3 }]).unwrap();
        let mut seen = Vec::new();
        grid.for_each_node(|_, x| seen.push((x[0], x[1])));
        assert_eq!(seen[0], (0.5, 0.5));
        assert_eq!(seen[1], (0.5, 1.5));
        assert_eq!(seen[3], (1.5, 0.5));
        assert_eq!(seen.len(), 6);
    }

    proptest! {
        #[test]
        fn convexity(x in 1e-3f64..10.0, y in 1e-3f64..10.0, t in 0.0f64..1.0) {
            for spec in PhiSpec::all() {
                let lhs = spec.phi(t * x + (1.0 - t) * y).unwrap();
                let rhs = t * spec.phi(x).unwrap() + (1.0 - t) * spec.phi(y).unwrap();
                prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()), "{} {} {} {}", spec, x, y, t);
            }
        }

        #[test]
        fn phi_is_nonnegative(x in 0.0f64..10.0) {
            for spec in PhiSpec::all() {
                prop_assert!(spec.phi(x).unwrap() >= 0.0);
            }
        }
    }
}
