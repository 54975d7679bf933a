//! Functional principal components: empirical covariance, its spectral
//! decomposition under the grid quadrature, and principal-component scores.
//!
//! The eigenproblem is solved in conjugated form: with `W` the diagonal of
//! quadrature weights, the symmetric matrix `W^{1/2} K W^{1/2}` is
//! diagonalized and eigenvectors are unscaled by `W^{-1/2}`, which makes the
//! returned eigenfunctions orthonormal under the quadrature inner product
//! rather than the raw Euclidean one.

use crate::curves::{FunctionalSample, Grid};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Mat};
use crate::real::Real;

/// Eigenvalues and discretized eigenfunctions of a covariance operator.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    /// λ₁ ≥ λ₂ ≥ … ≥ 0 (negatives from round-off clamped to zero).
    eigenvalues: Vec<T>,
    /// `J × G` matrix; row `j` holds the eigenfunction φ_j on the grid.
    eigenfunctions: Mat<T>,
    grid: Grid<T>,
}

impl<T: Real> EigenSystem<T> {
    /// Wraps precomputed spectral parts (used for simulation truth); checks
    /// shapes only, not orthonormality.
    pub fn from_parts(eigenvalues: Vec<T>, eigenfunctions: Mat<T>, grid: Grid<T>) -> Result<Self> {
        if eigenvalues.len() != eigenfunctions.rows() {
            return Err(Error::Dimension(format!(
                "{} eigenvalues but {} eigenfunction rows",
                eigenvalues.len(),
                eigenfunctions.rows()
            )));
        }
        if eigenfunctions.cols() != grid.len() {
            return Err(Error::Dimension(format!(
                "eigenfunctions on {} points but the grid has {}",
                eigenfunctions.cols(),
                grid.len()
            )));
        }
        Ok(EigenSystem {
            eigenvalues,
            eigenfunctions,
            grid,
        })
    }

    /// Retained component count `J`.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Eigenfunction `j` evaluated on the grid.
    pub fn eigenfunction(&self, j: usize) -> &[T] {
        self.eigenfunctions.row(j)
    }

    pub fn eigenfunctions(&self) -> &Mat<T> {
        &self.eigenfunctions
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Number of leading eigenvalues strictly above `floor`.
    pub fn positive_count(&self, floor: T) -> usize {
        self.eigenvalues.iter().take_while(|&&l| l > floor).count()
    }
}

/// Principal-component scores of a sample, with the system that produced them.
#[derive(Debug, Clone)]
pub struct ScoreMatrix<T> {
    /// `n × J` matrix of ξ_ij = ⟨X_i, φ_j⟩.
    scores: Mat<T>,
    eigen: EigenSystem<T>,
}

impl<T: Real> ScoreMatrix<T> {
    /// Wraps an externally computed score matrix (one row per observation,
    /// one column per component of `eigen`).
    pub fn from_parts(scores: Mat<T>, eigen: EigenSystem<T>) -> Result<Self> {
        if scores.cols() != eigen.len() {
            return Err(Error::Dimension(format!(
                "score matrix has {} columns but the system has {} components",
                scores.cols(),
                eigen.len()
            )));
        }
        Ok(ScoreMatrix { scores, eigen })
    }

    pub fn n(&self) -> usize {
        self.scores.rows()
    }

    /// Component count `J`.
    pub fn len(&self) -> usize {
        self.scores.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.cols() == 0
    }

    pub fn scores(&self) -> &Mat<T> {
        &self.scores
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.scores.row(i)
    }

    pub fn eigen(&self) -> &EigenSystem<T> {
        &self.eigen
    }
}

/// Pointwise empirical covariance `(1/n) Σ_i X_i(t_g) X_i(t_h)`.
///
/// The sample must already be centered — centering is a modeling choice the
/// caller makes explicitly.
pub fn empirical_covariance<T: Real>(sample: &FunctionalSample<T>) -> Result<Mat<T>> {
    if !sample.mean_removed() {
        return Err(Error::Precondition(
            "empirical covariance needs a centered sample; call center() first".into(),
        ));
    }
    let mut cov = sample.values().gram();
    cov.scale(T::one() / T::of_usize(sample.n()));
    Ok(cov)
}

/// Spectral decomposition of a covariance matrix under the grid quadrature.
///
/// Keeps at most `j_max` leading pairs; eigenfunctions are quadrature
/// orthonormal and sign-fixed so the grid value of largest magnitude is
/// positive (earliest index on ties).
pub fn eigensystem<T: Real>(cov: &Mat<T>, grid: &Grid<T>, j_max: usize) -> Result<EigenSystem<T>> {
    let g = grid.len();
    if cov.rows() != g || cov.cols() != g {
        return Err(Error::Dimension(format!(
            "covariance is {}×{} but the grid has {} points",
            cov.rows(),
            cov.cols(),
            g
        )));
    }
    if j_max < 1 {
        return Err(Error::Config("j_max must be at least 1".into()));
    }
    let scale = cov.max_abs().max(T::min_positive_value());
    if cov.asymmetry() > T::of(1e-10) * scale {
        return Err(Error::Precondition(
            "covariance matrix is not symmetric".into(),
        ));
    }

    let root_w: Vec<T> = grid.weights().iter().map(|&w| w.sqrt()).collect();
    let conjugated = Mat::from_fn(g, g, |i, j| cov[(i, j)] * root_w[i] * root_w[j]);
    let (raw_values, vectors) = sym_eigen(&conjugated);

    let j_keep = j_max.min(g);
    let eigenvalues: Vec<T> = raw_values
        .iter()
        .take(j_keep)
        .map(|&l| l.max(T::zero()))
        .collect();
    let mut eigenfunctions = Mat::from_fn(j_keep, g, |j, gidx| vectors[(gidx, j)] / root_w[gidx]);
    for j in 0..j_keep {
        let row = eigenfunctions.row_mut(j);
        let mut best = T::zero();
        let mut best_val = T::zero();
        for &v in row.iter() {
            if v.abs() > best {
                best = v.abs();
                best_val = v;
            }
        }
        if best_val < T::zero() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
    EigenSystem::from_parts(eigenvalues, eigenfunctions, grid.clone())
}

/// Scores ξ_ij = ⟨X_i, φ_j⟩ for the leading `j_keep` components.
pub fn scores<T: Real>(
    sample: &FunctionalSample<T>,
    eigen: &EigenSystem<T>,
    j_keep: usize,
) -> Result<ScoreMatrix<T>> {
    if j_keep > eigen.len() {
        return Err(Error::Dimension(format!(
            "requested {} score components but the system holds {}",
            j_keep,
            eigen.len()
        )));
    }
    if sample.grid().points() != eigen.grid().points() {
        return Err(Error::Dimension(
            "sample and eigensystem grids differ".into(),
        ));
    }
    let g = sample.grid_len();
    let weights = sample.grid().weights();
    // scores = X · W · Φᵀ, built as X times the weighted eigenfunction rows.
    let weighted = Mat::from_fn(g, j_keep, |gidx, j| {
        eigen.eigenfunctions()[(j, gidx)] * weights[gidx]
    });
    let scores = sample.values().matmul(&weighted);
    let truncated = EigenSystem::from_parts(
        eigen.eigenvalues()[..j_keep].to_vec(),
        Mat::from_fn(j_keep, g, |j, gidx| eigen.eigenfunctions()[(j, gidx)]),
        eigen.grid().clone(),
    )?;
    Ok(ScoreMatrix {
        scores,
        eigen: truncated,
    })
}
