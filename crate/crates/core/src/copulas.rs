//! Bivariate copula families and empirical copula densities.
//!
//! The families serve as data generators and as references for the tests.
//! [`empirical_copula_density_grid`] estimates the copula density of a sample
//! expressed in an arbitrary basis from its pseudo-observations, using a
//! Gaussian product kernel mirrored at the faces of the unit cube.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::stats::{std_normal_cdf, std_normal_pdf, std_normal_quantile, INV_SQRT_2PI};

/// The profile h of a periodic copula C(u, v) = H(u + v) − H(u) − H(v), where
/// H is the primitive of the primitive of h.
#[derive(Clone)]
pub enum PeriodicProfile {
    /// h ≡ 1, giving the independence copula.
    Uniform,
    Tabulated(Arc<PeriodicTable>),
}

/// Cumulative tables of G = ∫h and H = ∫G over one period.
pub struct PeriodicTable {
    g: Vec<f64>,
    h: Vec<f64>,
}

const PERIODIC_CELLS: usize = 20_000;

impl PeriodicProfile {
    /// Tabulates a caller-supplied profile. It must be nonnegative, 1-periodic
    /// and integrate to one over a period.
    pub fn custom(h: impl Fn(f64) -> f64) -> Result<Self> {
        let n = PERIODIC_CELLS;
        let step = 1.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| h(i as f64 * step)).collect();
        if vals.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("periodic profile must be finite and nonnegative".into()));
        }
        for t in [0.0, 0.137, 0.5, 0.861] {
            if (h(t) - h(t + 1.0)).abs() > 1e-9 * (1.0 + h(t).abs()) {
                return Err(Error::InvalidParameter("periodic profile must have period 1".into()));
            }
        }
        let mut g = vec![0.0; n + 1];
        for i in 1..=n {
            g[i] = g[i - 1] + 0.5 * step * (vals[i - 1] + vals[i]);
        }
        if (g[n] - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "periodic profile integrates to {} over a period, expected 1",
                g[n]
            )));
        }
        let mut hh = vec![0.0; n + 1];
        for i in 1..=n {
            hh[i] = hh[i - 1] + 0.5 * step * (g[i - 1] + g[i]);
        }
        Ok(PeriodicProfile::Tabulated(Arc::new(PeriodicTable { g, h: hh })))
    }

    fn lookup(table: &[f64], s: f64) -> f64 {
        let x = s * PERIODIC_CELLS as f64;
        let i = (x.floor() as usize).min(PERIODIC_CELLS - 1);
        let frac = x - i as f64;
        table[i] + frac * (table[i + 1] - table[i])
    }

    /// G(t) = ∫₀ᵗ h for t in [0, 2].
    fn big_g(&self, t: f64) -> f64 {
        match self {
            PeriodicProfile::Uniform => t,
            PeriodicProfile::Tabulated(tab) => {
                if t > 1.0 {
                    1.0 + Self::lookup(&tab.g, t - 1.0)
                } else {
                    Self::lookup(&tab.g, t)
                }
            }
        }
    }

    /// H(t) = ∫₀ᵗ G for t in [0, 2], using H(1 + s) = H(1) + s + H(s).
    fn big_h(&self, t: f64) -> f64 {
        match self {
            PeriodicProfile::Uniform => 0.5 * t * t,
            PeriodicProfile::Tabulated(tab) => {
                if t > 1.0 {
                    let s = t - 1.0;
                    tab.h[PERIODIC_CELLS] + s + Self::lookup(&tab.h, s)
                } else {
                    Self::lookup(&tab.h, t)
                }
            }
        }
    }
}

impl fmt::Debug for PeriodicProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodicProfile::Uniform => f.write_str("Uniform"),
            PeriodicProfile::Tabulated(_) => f.write_str("Tabulated"),
        }
    }
}

/// A bivariate copula family.
///
/// `Frank { alpha }` uses the generator Ψ(x) = ln((e^{αx} − 1)/(e^α − 1)),
/// for which positive α yields negative dependence.
#[derive(Debug, Clone)]
pub enum CopulaFamily {
    Gaussian { rho: f64 },
    Clayton { theta: f64 },
    Gumbel { alpha: f64 },
    Frank { alpha: f64 },
    Periodic(PeriodicProfile),
    Independent,
}

impl CopulaFamily {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            CopulaFamily::Gaussian { rho } if !(rho.abs() < 1.0) => bad(format!("|rho| < 1 required, got {rho}")),
            CopulaFamily::Clayton { theta } if !(theta > 0.0) => bad(format!("theta > 0 required, got {theta}")),
            CopulaFamily::Gumbel { alpha } if !(alpha >= 1.0) => bad(format!("alpha >= 1 required, got {alpha}")),
            CopulaFamily::Frank { alpha } if !(alpha != 0.0 && alpha.is_finite()) => {
                bad(format!("nonzero alpha required, got {alpha}"))
            }
            _ => Ok(()),
        }
    }

    /// C(u, v) on the closed unit square.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        self.validate()?;
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain { what: "copula_cdf", value: if (0.0..=1.0).contains(&u) { v } else { u } });
        }
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        let c = match self {
            CopulaFamily::Independent => u * v,
            CopulaFamily::Gaussian { rho } => {
                bivariate_normal_cdf(std_normal_quantile(u), std_normal_quantile(v), *rho)
            }
            CopulaFamily::Clayton { theta } => (u.powf(-theta) + v.powf(-theta) - 1.0).powf(-1.0 / theta),
            CopulaFamily::Gumbel { alpha } => {
                let a = (-u.ln()).powf(*alpha) + (-v.ln()).powf(*alpha);
                (-a.powf(1.0 / alpha)).exp()
            }
            CopulaFamily::Frank { alpha } => {
                let num = (alpha * u).exp_m1() * (alpha * v).exp_m1();
                (num / alpha.exp_m1()).ln_1p() / alpha
            }
            CopulaFamily::Periodic(p) => p.big_h(u + v) - p.big_h(u) - p.big_h(v),
        };
        Ok(c.clamp(0.0, u.min(v)))
    }

    /// ∂C/∂u at (u, v): the conditional distribution of V given U = u.
    pub fn conditional_cdf(&self, u: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        let w = match self {
            CopulaFamily::Independent => v,
            CopulaFamily::Gaussian { rho } => {
                let (x, y) = (std_normal_quantile(u), std_normal_quantile(v));
                std_normal_cdf((y - rho * x) / (1.0 - rho * rho).sqrt())
            }
            CopulaFamily::Clayton { theta } => {
                let s = u.powf(-theta) + v.powf(-theta) - 1.0;
                u.powf(-theta - 1.0) * s.powf(-1.0 / theta - 1.0)
            }
            CopulaFamily::Gumbel { alpha } => {
                let lu = -u.ln();
                let a = lu.powf(*alpha) + (-v.ln()).powf(*alpha);
                let c = (-a.powf(1.0 / alpha)).exp();
                c * lu.powf(alpha - 1.0) / u * a.powf(1.0 / alpha - 1.0)
            }
            CopulaFamily::Frank { alpha } => {
                let (eu, ev) = ((alpha * u).exp_m1(), (alpha * v).exp_m1());
                (alpha * u).exp() * ev / (alpha.exp_m1() + eu * ev)
            }
            CopulaFamily::Periodic(p) => p.big_g(u + v) - p.big_g(u),
        };
        if w.is_finite() {
            w.clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    /// n draws of (U, V).
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        self.validate()?;
        let mut out = DMatrix::zeros(n, 2);
        for i in 0..n {
            let (u, v) = match self {
                CopulaFamily::Gaussian { rho } => {
                    let z1: f64 = StandardNormal.sample(rng);
                    let e: f64 = StandardNormal.sample(rng);
                    let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * e;
                    (std_normal_cdf(z1), std_normal_cdf(z2))
                }
                CopulaFamily::Independent => (open_uniform(rng), open_uniform(rng)),
                _ => {
                    let u = open_uniform(rng);
                    let w = open_uniform(rng);
                    (u, self.invert_conditional(u, w))
                }
            };
            out[(i, 0)] = u;
            out[(i, 1)] = v;
        }
        Ok(out)
    }

    fn invert_conditional(&self, u: f64, w: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.conditional_cdf(u, mid) < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// P(X ≤ x, Y ≤ y) for a standard bivariate normal with correlation ρ.
///
/// Genz's Gauss–Legendre scheme for the bivariate normal upper tail.
fn bivariate_normal_cdf(x: f64, y: f64, rho: f64) -> f64 {
    bivariate_normal_upper(-x, -y, rho)
}

const GL_X: [&[f64]; 3] = [
    &[-0.932_469_514_203_152_2, -0.661_209_386_466_264_7, -0.238_619_186_083_197],
    &[
        -0.981_560_634_246_719_1,
        -0.904_117_256_370_475,
        -0.769_902_674_194_305,
        -0.587_317_954_286_617_1,
        -0.367_831_498_998_180_2,
        -0.125_233_408_511_469_2,
    ],
    &[
        -0.993_128_599_185_094_9,
        -0.963_971_927_277_913_8,
        -0.912_234_428_251_326,
        -0.839_116_971_822_218_8,
        -0.746_331_906_460_150_8,
        -0.636_053_680_726_515,
        -0.510_867_001_950_827_1,
        -0.373_706_088_715_419_6,
        -0.227_785_851_141_645_1,
        -0.076_526_521_133_497_33,
    ],
];

const GL_W: [&[f64]; 3] = [
    &[0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4],
    &[
        0.047_175_336_386_511_77,
        0.106_939_325_995_318_3,
        0.160_078_328_543_346_4,
        0.203_167_426_723_065_9,
        0.233_492_536_538_354_7,
        0.249_147_045_813_402_9,
    ],
    &[
        0.017_614_007_139_152_12,
        0.040_601_429_800_386_94,
        0.062_672_048_334_109_06,
        0.083_276_741_576_704_75,
        0.101_930_119_817_240_4,
        0.118_194_531_961_518_4,
        0.131_688_638_449_176_6,
        0.142_096_109_318_382_1,
        0.149_172_986_472_603_7,
        0.152_753_387_130_725_9,
    ],
];

/// P(X > h, Y > k) for a standard bivariate normal with correlation r.
fn bivariate_normal_upper(h: f64, k: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let level = if r.abs() < 0.3 {
        0
    } else if r.abs() < 0.75 {
        1
    } else {
        2
    };
    let (xs, ws) = (GL_X[level], GL_W[level]);
    let mut hk = h * k;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        let mut bvn = 0.0;
        for (x, w) in xs.iter().zip(ws) {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (sign * x + 1.0) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * two_pi) + std_normal_cdf(-h) * std_normal_cdf(-k);
    }
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -(bs / a_s + hk) / 2.0;
        if asr > -100.0 {
            bvn = a * asr.exp() * (1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        }
        if -hk < 100.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * two_pi.sqrt()
                * std_normal_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (x, w) in xs.iter().zip(ws) {
            for sign in [-1.0, 1.0] {
                let xs2 = (a * (sign * x + 1.0)).powi(2);
                let rs = (1.0 - xs2).sqrt();
                let asr = -(bs / xs2 + hk) / 2.0;
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs2 * (1.0 + d * xs2)));
                }
            }
        }
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn + std_normal_cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += std_normal_cdf(k) - std_normal_cdf(h);
        }
        out
    }
}

/// The Gaussian copula density φ_ρ(Φ⁻¹u, Φ⁻¹v) / (φ(Φ⁻¹u) φ(Φ⁻¹v)).
pub fn gaussian_copula_density(rho: f64, u: f64, v: f64) -> Result<f64> {
    CopulaFamily::Gaussian { rho }.validate()?;
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
        return Err(Error::Boundary { u, v });
    }
    let (x, y) = (std_normal_quantile(u), std_normal_quantile(v));
    let one_m = 1.0 - rho * rho;
    let q = (x * x - 2.0 * rho * x * y + y * y) / one_m;
    let joint = INV_SQRT_2PI * INV_SQRT_2PI / one_m.sqrt() * (-0.5 * q).exp();
    Ok(joint / (std_normal_pdf(x) * std_normal_pdf(y)))
}

pub fn copula_cdf(fam: &CopulaFamily, u: f64, v: f64) -> Result<f64> {
    fam.cdf(u, v)
}

pub fn copula_sample<R: Rng + ?Sized>(fam: &CopulaFamily, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    fam.sample(n, rng)
}

/// The Fréchet–Hoeffding bounds (max(1 − d + Σuᵢ, 0), min uᵢ).
pub fn frechet_bounds(u: &[f64]) -> (f64, f64) {
    let d = u.len() as f64;
    let lower = (1.0 - d + u.iter().sum::<f64>()).max(0.0);
    let upper = u.iter().copied().fold(f64::INFINITY, f64::min);
    (lower, upper)
}

/// Coordinatewise ranks divided by n + 1.
pub fn pseudo_observations(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let mut out = vec![0.0; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = (rank + 1) as f64 / (n + 1) as f64;
    }
    out
}

/// Kernel estimate of a copula density from pseudo-observations, with the
/// kernel mirrored at 0 and 1 in every coordinate.
#[derive(Debug, Clone)]
pub struct EmpiricalCopula {
    pseudo: Vec<f64>,
    n: usize,
    dim: usize,
    bandwidths: Vec<f64>,
}

impl EmpiricalCopula {
    /// Fits the estimate to the rows of an already-transformed sample.
    pub fn fit(y: &DMatrix<f64>) -> Result<Self> {
        let (n, dim) = y.shape();
        if n < 20 {
            return Err(Error::DegenerateSample(format!("{n} rows; at least 20 are needed")));
        }
        let columns: Vec<Vec<f64>> = (0..dim).map(|j| pseudo_observations(y.column(j).as_slice())).collect();
        let factor = (n as f64).powf(-1.0 / (4.0 + dim as f64));
        let bandwidths = columns.iter().map(|c| crate::stats::variance(c).sqrt() * factor).collect();
        let mut pseudo = Vec::with_capacity(n * dim);
        for i in 0..n {
            for c in &columns {
                pseudo.push(c[i]);
            }
        }
        Ok(EmpiricalCopula { pseudo, n, dim, bandwidths })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn reflected_kernel(&self, j: usize, u: f64, p: f64) -> f64 {
        let h = self.bandwidths[j];
        let k = |t: f64| std_normal_pdf(t / h) / h;
        k(u - p) + k(u + p) + k(u - 2.0 + p)
    }

    /// Density estimate at a point of the open unit cube.
    pub fn density_at(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for p in self.pseudo.chunks_exact(self.dim) {
            let mut prod = 1.0;
            for j in 0..self.dim {
                prod *= self.reflected_kernel(j, u[j], p[j]);
            }
            total += prod;
        }
        total / self.n as f64
    }

    /// Values on the m^d lattice of cell midpoints, in row-major order.
    pub fn grid(&self, m: usize) -> Result<CopulaGrid> {
        if m == 0 {
            return Err(Error::InvalidParameter("grid resolution must be positive".into()));
        }
        let axis: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let tables: Vec<Vec<f64>> = (0..self.dim)
            .map(|j| {
                let mut t = Vec::with_capacity(m * self.n);
                for &a in &axis {
                    for i in 0..self.n {
                        t.push(self.reflected_kernel(j, a, self.pseudo[i * self.dim + j]));
                    }
                }
                t
            })
            .collect();
        let cells = m.pow(self.dim as u32);
        let mut values = Vec::with_capacity(cells);
        let mut idx = vec![0usize; self.dim];
        let mut prod = vec![0.0; self.n];
        for _ in 0..cells {
            prod.iter_mut().for_each(|p| *p = 1.0);
            for j in 0..self.dim {
                let row = &tables[j][idx[j] * self.n..(idx[j] + 1) * self.n];
                prod.iter_mut().zip(row).for_each(|(p, k)| *p *= k);
            }
            values.push(prod.iter().sum::<f64>() / self.n as f64);
            for j in (0..self.dim).rev() {
                idx[j] += 1;
                if idx[j] < m {
                    break;
                }
                idx[j] = 0;
            }
        }
        Ok(CopulaGrid { dim: self.dim, axis, values })
    }
}

/// Copula density values on a regular lattice of (0, 1)^d.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaGrid {
    pub dim: usize,
    /// Lattice coordinates shared by every axis.
    pub axis: Vec<f64>,
    /// Values in row-major lattice order (last coordinate fastest).
    pub values: Vec<f64>,
}

impl CopulaGrid {
    pub fn resolution(&self) -> usize {
        self.axis.len()
    }

    /// Lattice coordinates of the value at flat position `k`.
    pub fn point(&self, mut k: usize) -> Vec<f64> {
        let m = self.resolution();
        let mut out = vec![0.0; self.dim];
        for j in (0..self.dim).rev() {
            out[j] = self.axis[k % m];
            k /= m;
        }
        out
    }

    /// Iterates over (coordinates, value) pairs in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        self.values.iter().enumerate().map(|(k, &v)| (self.point(k), v))
    }

    /// Values whose coordinates all lie in [lo, hi].
    pub fn region(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.rows().filter(|(p, _)| p.iter().all(|c| (lo..=hi).contains(c))).map(|(_, v)| v).collect()
    }

    /// Mean of |density − 1| over the sub-cube [lo, hi]^d.
    pub fn mean_abs_deviation_from_one(&self, lo: f64, hi: f64) -> f64 {
        let r = self.region(lo, hi);
        r.iter().map(|v| (v - 1.0).abs()).sum::<f64>() / r.len() as f64
    }
}

/// Copula density of the sample expressed in `basis`, on an m^d lattice.
///
/// Rows are mapped by y = Aᵀx, converted to pseudo-observations and smoothed
/// with a boundary-reflected kernel.
pub fn empirical_copula_density_grid(sample: &DMatrix<f64>, basis: &DMatrix<f64>, m: usize) -> Result<CopulaGrid> {
    let d = sample.ncols();
    if basis.shape() != (d, d) {
        return Err(Error::Dimension { expected: d, found: basis.nrows() });
    }
    let det = basis.clone().lu().determinant();
    if !(det.abs() > 1e-12 * basis.abs().max().powi(d as i32)) {
        return Err(Error::InvalidParameter("basis matrix is singular".into()));
    }
    EmpiricalCopula::fit(&(sample * basis))?.grid(m)
}
