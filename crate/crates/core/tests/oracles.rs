//! Estimators checked against independent closed forms and quadrature.

use nalgebra::{DMatrix, DVector};
use phipp::densities::{gaussian_projection, Normal1d};
use phipp::divergence::{divergence_numeric, Grid};
use phipp::pursuit::{empirical_divergence, truncate};
use phipp::{EllipticalDensity, PhiSpec, PursuitConfig, PursuitState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// D_φ(N(μ,1) ‖ N(0,1)) in closed form, using E_p[(q/p)^γ] = exp(γ(γ−1)μ²/2).
fn shifted_normal_divergence(spec: PhiSpec, mu: f64) -> f64 {
    let m2 = mu * mu;
    match spec {
        PhiSpec::KullbackLeibler => 0.5 * m2,
        PhiSpec::ChiSquare => 0.5 * (m2.exp() - 1.0),
        PhiSpec::Hellinger => 4.0 * (1.0 - (-m2 / 8.0).exp()),
        PhiSpec::Power { gamma } => {
            let g = gamma * (gamma - 1.0);
            ((0.5 * g * m2).exp() - 1.0) / g
        }
        PhiSpec::L1 => unreachable!(),
    }
}

#[test]
fn quadrature_matches_closed_forms_for_shifted_normals() {
    let p = Normal1d::STANDARD;
    for mu in [0.3, 0.7, 1.0] {
        let q = Normal1d { mean: mu, sd: 1.0 };
        let grid = Grid::covering_1d(0.5 * mu, 1.5);
        for spec in PhiSpec::all().into_iter().filter(PhiSpec::is_smooth) {
            let numeric = divergence_numeric(spec, |x: &[f64]| q.pdf(x[0]), |x: &[f64]| p.pdf(x[0]), &grid).unwrap();
            let exact = shifted_normal_divergence(spec, mu);
            assert!((numeric - exact).abs() < 1e-4, "{spec:?} mu={mu}: {numeric} vs {exact}");
        }
    }
}

#[test]
fn quadrature_matches_gaussian_kl_in_two_dimensions() {
    let s1 = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, 0.3, 0.8]);
    let m1 = DVector::from_row_slice(&[0.4, -0.2]);
    let q = EllipticalDensity::gaussian(m1.clone(), s1.clone()).unwrap();
    let p = EllipticalDensity::standard(2);
    let exact = 0.5 * (s1.trace() + m1.norm_squared() - 2.0 - s1.determinant().ln());
    let grid = Grid::covering_2d([0.2, -0.1], [1.2, 1.2]);
    let numeric = divergence_numeric(
        PhiSpec::KullbackLeibler,
        |x: &[f64]| q.pdf(x).unwrap(),
        |x: &[f64]| p.pdf(x).unwrap(),
        &grid,
    )
    .unwrap();
    assert!((numeric - exact).abs() < 1e-3, "{numeric} vs {exact}");
}

fn draw(f: &EllipticalDensity, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, 2);
    for i in 0..n {
        let v = f.sample(rng).unwrap();
        x[(i, 0)] = v[0];
        x[(i, 1)] = v[1];
    }
    x
}

fn dual_and_oracle(mu: [f64; 2], sigma: [f64; 4], a: [f64; 2], spec: PhiSpec, seed: u64) -> (f64, f64) {
    let f = EllipticalDensity::gaussian(DVector::from_row_slice(&mu), DMatrix::from_row_slice(2, 2, &sigma)).unwrap();
    let g = EllipticalDensity::standard(2);
    let fa = gaussian_projection(&f, &a).unwrap();
    let q = |x: &[f64]| {
        let t = a[0] * x[0] + a[1] * x[1];
        g.pdf(x).unwrap() * fa.pdf(t) / Normal1d::STANDARD.pdf(t)
    };
    let grid = Grid::covering_2d([0.5 * mu[0], 0.5 * mu[1]], [sigma[0].sqrt().max(1.0), sigma[3].sqrt().max(1.0)]);
    let oracle = divergence_numeric(spec, q, |x: &[f64]| f.pdf(x).unwrap(), &grid).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 5000;
    let xf = draw(&f, n, &mut rng);
    let xg = DMatrix::<f64>::from_fn(n, 2, |_, _| StandardNormal.sample(&mut rng));
    let cfg = PursuitConfig::default();
    let (tf, tg) = truncate(&xf, &xg, &cfg.truncation).unwrap();
    let state = PursuitState::with_samples(&tf, &tg, spec, cfg).unwrap();
    (empirical_divergence(&state, &a).unwrap(), oracle)
}

#[test]
fn dual_estimate_tracks_quadrature_when_the_ratio_is_exact() {
    let (est, oracle) = dual_and_oracle([0.0, 0.7], [1.0, 0.0, 0.0, 1.0], [1.0, 0.0], PhiSpec::KullbackLeibler, 41);
    assert!((oracle - 0.245).abs() < 1e-3, "oracle {oracle}");
    assert!((est - oracle).abs() <= 0.05, "{est} vs {oracle}");
}

#[test]
fn dual_estimate_tracks_quadrature_along_the_matching_direction() {
    let (est, oracle) = dual_and_oracle([0.48, 0.64], [1.0, 0.0, 0.0, 1.0], [0.6, 0.8], PhiSpec::ChiSquare, 42);
    assert!(oracle.abs() < 1e-6, "oracle {oracle}");
    assert!((est - oracle).abs() <= 0.05, "{est} vs {oracle}");
}

#[test]
fn dual_estimate_tracks_quadrature_for_correlated_targets() {
    let (est, oracle) = dual_and_oracle([0.0, 0.0], [1.0, 0.4, 0.4, 1.0], [1.0, 0.0], PhiSpec::Hellinger, 43);
    assert!(oracle > 0.05, "oracle {oracle}");
    assert!((est - oracle).abs() <= 0.05, "{est} vs {oracle}");
}
