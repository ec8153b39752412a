//! Data used by the simulation studies and the real-data example.

use nalgebra::DMatrix;
use rand::Rng;

use crate::copulas::CopulaFamily;
use crate::error::Result;

/// Margins and dependence of the two simulated designs.
///
/// The first margin is a Gumbel law for maxima with the given location and
/// scale, the second an exponential law with the given rate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimulationDesign {
    pub gumbel_location: f64,
    pub gumbel_scale: f64,
    pub exponential_rate: f64,
    /// Correlation of the Gaussian copula; zero gives independent margins.
    pub rho: f64,
}

impl SimulationDesign {
    /// Gaussian copula with ρ = 0.5 joining Gumbel(−1, 1) and Exponential(2).
    pub const SIM1: SimulationDesign =
        SimulationDesign { gumbel_location: -1.0, gumbel_scale: 1.0, exponential_rate: 2.0, rho: 0.5 };
    /// The same margins, independent.
    pub const SIM2: SimulationDesign =
        SimulationDesign { gumbel_location: -1.0, gumbel_scale: 1.0, exponential_rate: 2.0, rho: 0.0 };

    pub fn gumbel_quantile(&self, u: f64) -> f64 {
        self.gumbel_location - self.gumbel_scale * (-u.ln()).ln()
    }

    pub fn exponential_quantile(&self, v: f64) -> f64 {
        -(-v).ln_1p() / self.exponential_rate
    }

    /// Draws `n` observations as an n × 2 matrix.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        let copula = if self.rho == 0.0 { CopulaFamily::Independent } else { CopulaFamily::Gaussian { rho: self.rho } };
        let mut uv = copula.sample(n, rng)?;
        for i in 0..n {
            uv[(i, 0)] = self.gumbel_quantile(uv[(i, 0)]);
            uv[(i, 1)] = self.exponential_quantile(uv[(i, 1)]);
        }
        Ok(uv)
    }
}

/// Daily closing prices of Renault and Peugeot shares in 2010, most recent
/// first, as (date, Renault, Peugeot).
pub const RENAULT_PEUGEOT: [(&str, f64, f64); 143] = [
    ("23/07/10", 34.9, 24.2),
    ("22/07/10", 34.26, 24.01),
    ("21/07/10", 33.15, 23.3),
    ("20/07/10", 32.69, 22.78),
    ("19/07/10", 33.24, 23.36),
    ("16/07/10", 33.92, 23.77),
    ("15/07/10", 34.44, 23.71),
    ("14/07/10", 35.08, 24.36),
    ("13/07/10", 35.28, 24.37),
    ("12/07/10", 33.84, 23.16),
    ("09/07/10", 33.46, 23.13),
    ("08/07/10", 33.08, 22.65),
    ("07/07/10", 32.15, 22.19),
    ("06/07/10", 31.12, 21.56),
    ("05/07/10", 30.02, 20.81),
    ("02/07/10", 30.17, 20.85),
    ("01/07/10", 29.56, 20.05),
    ("30/06/10", 30.78, 21.07),
    ("29/06/10", 30.55, 20.97),
    ("28/06/10", 32.34, 22.3),
    ("25/06/10", 31.35, 21.68),
    ("24/06/10", 32.29, 22.25),
    ("23/06/10", 33.58, 22.47),
    ("22/06/10", 33.84, 22.77),
    ("21/06/10", 34.06, 23.25),
    ("18/06/10", 32.89, 22.7),
    ("17/06/10", 32.08, 22.31),
    ("16/06/10", 31.87, 21.92),
    ("15/06/10", 32.03, 22.12),
    ("14/06/10", 31.45, 22.2),
    ("11/06/10", 30.62, 21.42),
    ("10/06/10", 30.42, 20.93),
    ("09/06/10", 29.27, 20.34),
    ("08/06/10", 28.48, 19.73),
    ("07/06/10", 28.92, 20.15),
    ("04/06/10", 29.19, 20.27),
    ("03/06/10", 30.35, 20.46),
    ("02/06/10", 29.33, 19.53),
    ("01/06/10", 28.87, 19.45),
    ("31/05/10", 29.39, 19.54),
    ("28/05/10", 29.16, 19.55),
    ("27/05/10", 29.18, 19.81),
    ("26/05/10", 27.5, 18.5),
    ("25/05/10", 26.76, 18.08),
    ("24/05/10", 28.75, 18.81),
    ("21/05/10", 28.78, 18.82),
    ("20/05/10", 28.53, 18.84),
    ("19/05/10", 29.49, 19.25),
    ("18/05/10", 30.95, 19.76),
    ("17/05/10", 30.92, 19.35),
    ("14/05/10", 31.35, 19.34),
    ("13/05/10", 33.65, 20.76),
    ("12/05/10", 33.63, 20.52),
    ("11/05/10", 33.38, 20.34),
    ("10/05/10", 33.28, 20.3),
    ("07/05/10", 31.0, 19.24),
    ("06/05/10", 32.4, 20.22),
    ("05/05/10", 32.95, 20.45),
    ("04/05/10", 33.3, 21.03),
    ("03/05/10", 35.58, 22.63),
    ("30/04/10", 35.41, 22.45),
    ("29/04/10", 35.53, 22.36),
    ("28/04/10", 34.75, 22.33),
    ("27/04/10", 36.2, 22.9),
    ("26/04/10", 37.65, 23.73),
    ("23/04/10", 36.72, 23.5),
    ("22/04/10", 34.36, 22.72),
    ("21/04/10", 35.01, 22.86),
    ("20/04/10", 35.62, 22.88),
    ("19/04/10", 34.08, 21.77),
    ("16/04/10", 34.46, 21.71),
    ("15/04/10", 35.16, 22.22),
    ("14/04/10", 35.1, 22.22),
    ("13/04/10", 35.28, 22.45),
    ("12/04/10", 35.17, 21.85),
    ("09/04/10", 35.76, 21.9),
    ("08/04/10", 35.67, 21.67),
    ("07/04/10", 36.5, 21.89),
    ("06/04/10", 36.87, 22.0),
    ("01/04/10", 35.5, 21.97),
    ("31/03/10", 34.7, 21.8),
    ("30/03/10", 34.8, 22.24),
    ("29/03/10", 35.7, 22.73),
    ("26/03/10", 35.54, 22.58),
    ("25/03/10", 35.53, 22.73),
    ("24/03/10", 33.8, 21.82),
    ("23/03/10", 34.1, 21.58),
    ("22/03/10", 33.73, 21.64),
    ("19/03/10", 34.12, 21.68),
    ("18/03/10", 34.44, 21.75),
    ("17/03/10", 34.68, 21.98),
    ("16/03/10", 34.33, 21.88),
    ("15/03/10", 33.57, 21.53),
    ("12/03/10", 33.9, 21.86),
    ("11/03/10", 33.27, 21.58),
    ("10/03/10", 33.12, 21.47),
    ("09/03/10", 32.69, 21.54),
    ("08/03/10", 32.99, 21.66),
    ("05/03/10", 32.89, 21.85),
    ("04/03/10", 31.64, 21.26),
    ("03/03/10", 31.65, 20.7),
    ("02/03/10", 31.05, 20.2),
    ("01/03/10", 30.26, 19.54),
    ("26/02/10", 30.2, 19.39),
    ("25/02/10", 29.42, 18.98),
    ("24/02/10", 30.9, 19.49),
    ("23/02/10", 30.54, 19.74),
    ("22/02/10", 31.89, 20.06),
    ("19/02/10", 32.29, 20.67),
    ("18/02/10", 32.26, 20.41),
    ("17/02/10", 31.69, 20.31),
    ("16/02/10", 31.08, 19.8),
    ("15/02/10", 30.25, 19.66),
    ("12/02/10", 29.56, 19.57),
    ("11/02/10", 31.0, 20.4),
    ("10/02/10", 32.78, 21.21),
    ("09/02/10", 33.31, 22.31),
    ("08/02/10", 32.63, 21.95),
    ("05/02/10", 32.15, 22.33),
    ("04/02/10", 33.72, 22.86),
    ("03/02/10", 35.32, 23.93),
    ("02/02/10", 35.29, 23.8),
    ("01/02/10", 35.31, 24.05),
    ("29/01/10", 34.26, 23.64),
    ("28/01/10", 33.94, 23.31),
    ("27/01/10", 33.85, 23.88),
    ("26/01/10", 34.97, 24.86),
    ("25/01/10", 35.06, 24.35),
    ("22/01/10", 35.7, 24.95),
    ("21/01/10", 36.1, 25.0),
    ("20/01/10", 36.92, 25.35),
    ("19/01/10", 38.4, 25.81),
    ("18/01/10", 39.28, 25.95),
    ("15/01/10", 38.6, 25.7),
    ("14/01/10", 39.56, 26.67),
    ("13/01/10", 39.49, 26.13),
    ("12/01/10", 38.36, 25.98),
    ("11/01/10", 39.21, 26.65),
    ("08/01/10", 39.38, 26.5),
    ("07/01/10", 39.69, 26.7),
    ("06/01/10", 39.25, 26.32),
    ("05/01/10", 38.31, 24.74),
    ("04/01/10", 38.2, 24.52),
];

/// The price table as an n × 2 matrix of natural logarithms.
pub fn renault_peugeot_log_prices() -> DMatrix<f64> {
    DMatrix::from_fn(RENAULT_PEUGEOT.len(), 2, |i, j| {
        let (_, r, p) = RENAULT_PEUGEOT[i];
        if j == 0 {
            r.ln()
        } else {
            p.ln()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_endpoints() {
        assert_eq!(RENAULT_PEUGEOT[0], ("23/07/10", 34.9, 24.2));
        assert_eq!(RENAULT_PEUGEOT[RENAULT_PEUGEOT.len() - 1], ("04/01/10", 38.2, 24.52));
        let mut dates: Vec<&str> = RENAULT_PEUGEOT.iter().map(|r| r.0).collect();
        dates.sort();
        dates.dedup();
        assert_eq!(dates.len(), RENAULT_PEUGEOT.len());
        assert!(RENAULT_PEUGEOT.iter().all(|r| r.1 > 20.0 && r.2 > 15.0));
    }

    #[test]
    fn log_prices() {
        let m = renault_peugeot_log_prices();
        assert_eq!(m.shape(), (RENAULT_PEUGEOT.len(), 2));
        assert_eq!(m[(0, 0)], 34.9f64.ln());
    }

    #[test]
    fn margins_have_the_stated_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SimulationDesign::SIM1.sample(40_000, &mut rng).unwrap();
        let euler = 0.577_215_664_901_532_9;
        let m0 = s.column(0).mean();
        let m1 = s.column(1).mean();
        assert!((m0 - (-1.0 + euler)).abs() < 0.03, "{m0}");
        assert!((m1 - 0.5).abs() < 0.01, "{m1}");
        assert!(s.column(1).iter().all(|&x| x > 0.0));
    }
}
