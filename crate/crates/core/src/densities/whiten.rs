use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The affine map z = L⁻¹(x − μ) with L the lower Cholesky factor of the
/// sample covariance, or its diagonal for per-coordinate standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    factor_inv: DMatrix<f64>,
}

impl Whitening {
    /// Full whitening: the output has identity sample covariance.
    pub fn full(sample: &DMatrix<f64>) -> Result<(Self, DMatrix<f64>)> {
        Self::build(sample, false)
    }

    /// Per-coordinate standardization: unit variances, correlations untouched.
    pub fn diagonal(sample: &DMatrix<f64>) -> Result<(Self, DMatrix<f64>)> {
        Self::build(sample, true)
    }

    fn build(sample: &DMatrix<f64>, diagonal: bool) -> Result<(Self, DMatrix<f64>)> {
        let (n, d) = sample.shape();
        if n < d + 1 {
            return Err(Error::DegenerateSample(format!("{n} rows are too few for dimension {d}")));
        }
        let (mean, mut cov) = super::mean_and_covariance(sample);
        if diagonal {
            cov = DMatrix::from_diagonal(&cov.diagonal());
        }
        let factor =
            cov.cholesky().ok_or_else(|| Error::DegenerateSample("sample covariance is rank deficient".into()))?.l();
        let factor_inv = factor
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateSample("whitening factor is singular".into()))?;
        let w = Whitening { mean, factor, factor_inv };
        let white = w.apply_matrix(sample);
        Ok((w, white))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// The factor L, so that x = L z + μ.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let c = DVector::from_column_slice(x) - &self.mean;
        (&self.factor_inv * c).iter().copied().collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        (&self.factor * DVector::from_column_slice(z) + &self.mean).iter().copied().collect()
    }

    pub fn apply_matrix(&self, sample: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centered = sample.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        centered * self.factor_inv.transpose()
    }

    pub fn invert_matrix(&self, white: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = white * self.factor.transpose();
        for mut row in x.row_iter_mut() {
            row += self.mean.transpose();
        }
        x
    }

    /// Maps a whitened projection direction w to the covector a = L⁻ᵀ w with
    /// aᵀx = wᵀz, then normalizes it and fixes its sign.
    pub fn covector_to_original(&self, w: &[f64]) -> Vec<f64> {
        let a = self.factor_inv.transpose() * DVector::from_column_slice(w);
        let a = a.normalize();
        canonical_sign(a.as_slice())
    }
}

/// Whitens a sample with the inverse Cholesky factor of its covariance.
pub fn whiten(sample: &DMatrix<f64>) -> Result<(Whitening, DMatrix<f64>)> {
    Whitening::full(sample)
}

/// Flips `v` so that its first nonzero component is positive.
pub fn canonical_sign(v: &[f64]) -> Vec<f64> {
    let scale = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let first = v.iter().find(|c| c.abs() > 1e-12 * scale).copied().unwrap_or(0.0);
    if first < 0.0 {
        v.iter().map(|c| -c).collect()
    } else {
        v.to_vec()
    }
}
