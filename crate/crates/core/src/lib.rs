//! Projection pursuit driven by φ-divergences, with goodness-of-fit tests
//! for elliptical and independent copulas.
//!
//! The pursuit deforms a Gaussian instrumental density `g` one direction at a
//! time until it matches the sampled density `f`. Each step is tested with a
//! normalized dual-divergence statistic; the accepted steps describe how the
//! copula of `f` factorizes in the discovered basis.
//!
//! ```
//! use phipp::divergence::PhiSpec;
//!
//! let kl = PhiSpec::KullbackLeibler;
//! assert!((kl.phi(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copulas;
pub mod datasets;
pub mod densities;
pub mod divergence;
pub mod error;
pub mod gof;
pub mod pursuit;
mod stats;

pub use copulas::{CopulaFamily, CopulaGrid, PeriodicProfile};
pub use densities::{EllipticalDensity, Generator, KernelDensity, Normal1d, Whitening};
pub use divergence::{Grid, PhiSpec};
pub use error::{Error, Result};
pub use gof::{Factorization, QMode, TestReport, TestSettings};
pub use pursuit::{OptimizerConfig, PursuitConfig, PursuitMode, PursuitOutcome, PursuitState, TruncationRule};
