//! Portable JSON snapshot of a fit: everything `predict` needs, without
//! the training data.

use serde::{Deserialize, Serialize};

use crate::curves::Grid;
use crate::error::{Error, Result};
use crate::splines::SplineBasis;

use super::ProfileFit;

/// Flat `f64` image of a [`ProfileFit`]; round-trips through JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitArtifact {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub b_first: Vec<f64>,
    pub knots_first: Vec<f64>,
    pub b_second: Vec<f64>,
    pub knots_second: Vec<f64>,
    pub degree: usize,
    pub a_coeffs: Vec<f64>,
    pub a_curve: Vec<f64>,
    pub m: usize,
    pub m_tilde: usize,
    pub k_star: usize,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub grid_points: Vec<f64>,
    pub mean_curve: Vec<f64>,
}

impl FitArtifact {
    pub fn from_fit(fit: &ProfileFit<f64>) -> Self {
        FitArtifact {
            alpha: fit.alpha.clone(),
            beta: fit.beta.clone(),
            b_first: fit.b_first.clone(),
            knots_first: fit.basis_first.knots().to_vec(),
            b_second: fit.b_second.clone(),
            knots_second: fit.basis_second.knots().to_vec(),
            degree: fit.basis_first.degree(),
            a_coeffs: fit.a_coeffs.clone(),
            a_curve: fit.a_curve.clone(),
            m: fit.m,
            m_tilde: fit.m_tilde,
            k_star: fit.k_star,
            objective_value: fit.objective_value,
            iterations: fit.iterations,
            converged: fit.converged,
            objective_trace: fit.objective_trace.clone(),
            grid_points: fit.grid.points().to_vec(),
            mean_curve: fit.mean_curve.clone(),
        }
    }

    /// Reconstructs a usable fit (bases and grid revalidated).
    pub fn to_fit(&self) -> Result<ProfileFit<f64>> {
        let basis_first = SplineBasis::from_knots(self.degree, self.knots_first.clone())?;
        let basis_second = SplineBasis::from_knots(self.degree, self.knots_second.clone())?;
        if self.b_first.len() != basis_first.dim() {
            return Err(Error::Artifact(format!(
                "first-stage coefficients have length {} but the basis dimension is {}",
                self.b_first.len(),
                basis_first.dim()
            )));
        }
        if self.b_second.len() != basis_second.dim() {
            return Err(Error::Artifact(format!(
                "second-stage coefficients have length {} but the basis dimension is {}",
                self.b_second.len(),
                basis_second.dim()
            )));
        }
        let grid = Grid::new(self.grid_points.clone())?;
        if self.mean_curve.len() != grid.len() || self.a_curve.len() != grid.len() {
            return Err(Error::Artifact(
                "stored curves do not match the stored grid length".into(),
            ));
        }
        Ok(ProfileFit {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            b_first: self.b_first.clone(),
            basis_first,
            a_coeffs: self.a_coeffs.clone(),
            a_curve: self.a_curve.clone(),
            b_second: self.b_second.clone(),
            basis_second,
            m: self.m,
            m_tilde: self.m_tilde,
            k_star: self.k_star,
            objective_value: self.objective_value,
            iterations: self.iterations,
            converged: self.converged,
            objective_trace: self.objective_trace.clone(),
            grid,
            mean_curve: self.mean_curve.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Artifact(format!("could not serialize fit: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Artifact(format!("invalid fit file: {e}")))
    }
}
