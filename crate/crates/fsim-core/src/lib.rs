//! Estimation of a partially linear single-index regression with a
//! functional covariate: a scalar response driven by the integral of an
//! unknown slope function against a random curve, a linear part, and an
//! unknown link of a single index of scalar covariates.
//!
//! The pipeline: center the curves, take functional principal components,
//! reduce the functional term to component scores, profile out the link
//! function with a B-spline basis, minimize over the index direction and
//! linear coefficients, then recover the slope function and refit the link.
//!
//! Everything numeric is generic over the [`Real`] scalar; the crate root
//! exports `f64` aliases for the common case.

pub mod curves;
pub mod error;
pub mod estimator;
pub mod fpca;
pub mod linalg;
pub mod real;
pub mod splines;

pub use error::{Error, Result};
pub use real::Real;

/// Default evaluation grid size for curves on `[0, 1]`.
pub const DEFAULT_GRID_LEN: usize = 101;

/// `f64` evaluation grid.
pub type Grid = curves::Grid<f64>;
/// `f64` curve sample.
pub type FunctionalSample = curves::FunctionalSample<f64>;
/// `f64` eigensystem.
pub type EigenSystem = fpca::EigenSystem<f64>;
/// `f64` score matrix.
pub type ScoreMatrix = fpca::ScoreMatrix<f64>;
/// `f64` spline basis.
pub type SplineBasis = splines::SplineBasis<f64>;
/// `f64` regression data bundle.
pub type RegressionData = estimator::RegressionData<f64>;
/// `f64` estimator configuration.
pub type OptimizerConfig = estimator::OptimizerConfig<f64>;
/// `f64` fit result.
pub type ProfileFit = estimator::ProfileFit<f64>;
