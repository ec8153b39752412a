//! Instrumental densities, kernel estimates and whitening.
//!
//! The pursuit works with three kinds of densities: the elliptical
//! instrumental density `g` together with its exact one-dimensional
//! projections, product-Gaussian kernel estimates of `f` and of its
//! projections, and the affine map that turns the fitted `g` into a standard
//! normal.

mod elliptical;
mod kde;
mod whiten;

pub use elliptical::{elliptical_pdf, gaussian_fit, gaussian_projection, EllipticalDensity, Generator, Normal1d};
pub use kde::{kde_fit, kde_pdf, kde_sample, KernelDensity};
pub use whiten::{canonical_sign, whiten, Whitening};

use nalgebra::{DMatrix, DVector};

/// Sample mean and unbiased covariance of the rows of `sample`.
pub(crate) fn mean_and_covariance(sample: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = sample.nrows();
    let mean = sample.row_mean().transpose();
    let mut centered = sample.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (mean, cov)
}
