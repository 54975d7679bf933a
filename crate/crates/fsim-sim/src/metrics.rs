//! Error metrics for fitted curves and predictions.

use fsim_core::{estimator, Grid, ProfileFit};

use crate::error::{Result, SimError};
use crate::models::SimulatedData;

/// Integrated squared error `∫(estimate − truth)²` by trapezoid quadrature
/// over the grid's interval.
///
/// Both functions must be tabulated on `grid`.
pub fn mise(estimate: &[f64], truth: &[f64], grid: &Grid) -> Result<f64> {
    if estimate.len() != grid.len() || truth.len() != grid.len() {
        return Err(SimError::Spec(format!(
            "integrated-error inputs must match the grid: estimate has {} points, \
             truth has {}, grid has {}",
            estimate.len(),
            truth.len(),
            grid.len()
        )));
    }
    let diff: Vec<f64> = estimate.iter().zip(truth).map(|(e, t)| e - t).collect();
    Ok(grid.inner_product(&diff, &diff)?)
}

/// Mean absolute deviation between two equal-length vectors.
///
/// The building block of prediction error: the first argument is the
/// noise-free reference, the second the predictions.
pub fn mean_abs_deviation(reference: &[f64], predicted: &[f64]) -> Result<f64> {
    if reference.len() != predicted.len() || reference.is_empty() {
        return Err(SimError::Spec(format!(
            "prediction error needs two equal-length nonempty vectors, got {} and {}",
            reference.len(),
            predicted.len()
        )));
    }
    let sum: f64 = reference
        .iter()
        .zip(predicted)
        .map(|(r, p)| (r - p).abs())
        .sum();
    Ok(sum / reference.len() as f64)
}

/// Mean absolute prediction error of a fit on an independent test draw,
/// measured against the noise-free regression values stored with the draw.
pub fn mae_prediction(fit: &ProfileFit, test: &SimulatedData) -> Result<f64> {
    let predictions: Vec<f64> = (0..test.n())
        .map(|i| estimator::predict(fit, test.curves.curve(i), test.w.row(i), test.z.row(i)))
        .collect::<fsim_core::Result<_>>()?;
    mean_abs_deviation(&test.noiseless, &predictions)
}
