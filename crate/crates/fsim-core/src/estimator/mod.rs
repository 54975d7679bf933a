//! Profile B-spline estimation of the partially linear single-index model
//! with a functional covariate.
//!
//! The response decomposes as
//! `Y = ∫ a(t) X(t) dt + Wᵀα + g(Zᵀβ) + ε`.
//! Estimation profiles the link out in closed form: for each candidate
//! `(α, β)` the spline coefficients of `g` minimize a least-squares
//! criterion on tilde-transformed data (responses, covariates, and basis
//! columns each have their projection onto the leading score directions
//! removed), leaving a low-dimensional objective that a quasi-Newton
//! optimizer minimizes over `(α, β)` under the constraints `‖β‖ = 1`,
//! `β_d ≥ ρ₀`. The slope function is then recovered from score-space
//! residuals and the link is refit on a BIC-selected basis.

mod artifact;
mod optimize;
mod profile;
mod selection;

pub use artifact::FitArtifact;
pub use optimize::{init_linear_fit, minimize_profile, LinearBaseline, OptDiagnostics};
pub use profile::{
    basis_design, objective, profile_coeffs, smoother_matrix, tilde_transform, ProfileContext,
    ProfileEval, SmootherMatrix, TildeData,
};
pub use selection::{second_stage_link, select_k_star, select_m_tilde, slope_estimate};

use crate::curves::{FunctionalSample, Grid};
use crate::error::{Error, Result};
use crate::fpca::{self, ScoreMatrix};
use crate::linalg::{dot, Mat};
use crate::real::Real;
use crate::splines::{KnotSpec, SplineBasis};

use profile::TildePieces;

/// Everything the estimator consumes: responses, scalar covariates, index
/// covariates, and the score representation of the functional covariate.
#[derive(Debug, Clone)]
pub struct RegressionData<T> {
    y: Vec<T>,
    w: Mat<T>,
    z: Mat<T>,
    scores: ScoreMatrix<T>,
    sample: FunctionalSample<T>,
}

impl<T: Real> RegressionData<T> {
    /// Assembles pre-computed blocks; `sample` must be centered and must be
    /// the sample the scores were computed from.
    pub fn new(
        y: Vec<T>,
        w: Mat<T>,
        z: Mat<T>,
        scores: ScoreMatrix<T>,
        sample: FunctionalSample<T>,
    ) -> Result<Self> {
        let n = y.len();
        if w.rows() != n || z.rows() != n || scores.n() != n || sample.n() != n {
            return Err(Error::Dimension(format!(
                "inconsistent sample sizes: y {}, w {}, z {}, scores {}, curves {}",
                n,
                w.rows(),
                z.rows(),
                scores.n(),
                sample.n()
            )));
        }
        if z.cols() < 2 {
            return Err(Error::Dimension(format!(
                "the index needs at least 2 covariates, got {}",
                z.cols()
            )));
        }
        if !sample.mean_removed() {
            return Err(Error::Precondition(
                "curves must be centered (or marked centered) before estimation".into(),
            ));
        }
        if sample.grid().points() != scores.eigen().grid().points() {
            return Err(Error::Dimension(
                "curve grid and score-system grid differ".into(),
            ));
        }
        for (name, vals) in [("y", &y[..]), ("w", w.data()), ("z", z.data())] {
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("non-finite value in {name} block")));
            }
        }
        Ok(RegressionData {
            y,
            w,
            z,
            scores,
            sample,
        })
    }

    /// Builds the data bundle from raw curves: centers them (when not
    /// already centered), estimates the principal components, and computes
    /// scores with `J = min(n − 1, G, 50)` components.
    pub fn from_sample(
        y: Vec<T>,
        w: Mat<T>,
        z: Mat<T>,
        sample: FunctionalSample<T>,
    ) -> Result<Self> {
        let centered = if sample.mean_removed() {
            sample
        } else {
            sample.center()
        };
        let n = centered.n();
        let g = centered.grid_len();
        let j_max = n.saturating_sub(1).max(1).min(g).min(50);
        let cov = fpca::empirical_covariance(&centered)?;
        let eig = fpca::eigensystem(&cov, centered.grid(), j_max)?;
        let j = eig.len();
        let scores = fpca::scores(&centered, &eig, j)?;
        RegressionData::new(y, w, z, scores, centered)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Scalar-covariate count `q` (may be zero).
    pub fn q(&self) -> usize {
        self.w.cols()
    }

    /// Index-covariate count `d`.
    pub fn d(&self) -> usize {
        self.z.cols()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn w(&self) -> &Mat<T> {
        &self.w
    }

    pub fn z(&self) -> &Mat<T> {
        &self.z
    }

    pub fn scores(&self) -> &ScoreMatrix<T> {
        &self.scores
    }

    pub fn eigenvalues(&self) -> &[T] {
        self.scores.eigen().eigenvalues()
    }

    pub fn sample(&self) -> &FunctionalSample<T> {
        &self.sample
    }

    /// Index values `u_i = Z_iᵀβ`.
    pub fn index_values(&self, beta: &[T]) -> Vec<T> {
        self.z.matvec(beta)
    }
}

/// How the spline knot count over the index range is chosen.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum KnotRule<T> {
    /// Spacing `h₀ = c₀ · n^{−1/(2s−1)}` for degree `s` (the default, c₀ = 1).
    ScaledSpacing { c0: T },
    /// Fixed spacing `h₀`.
    Spacing(T),
    /// Fixed subinterval count.
    Subintervals(usize),
}

/// Tuning constants for the full fit.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerConfig<T> {
    /// Lower bound for the last index coefficient β_d.
    pub rho0: T,
    /// Relative objective-decrease tolerance.
    pub tol_obj: T,
    /// Parameter step tolerance.
    pub tol_step: T,
    /// Outer iteration cap.
    pub max_iter: usize,
    /// Ridge floor for the inner normal equations.
    pub ridge: T,
    /// Frequency cut-off for the profiling smoother.
    pub m: usize,
    /// Spline degree `s`.
    pub degree: usize,
    /// Knot scheme for the index basis.
    pub knots: KnotRule<T>,
    /// Candidate grid for the slope cut-off m̃ (default `1..=min(20, n/4)`).
    pub m_tilde_grid: Option<Vec<usize>>,
    /// Candidate grid for the second-stage dimension K* (default
    /// `s+1..=min(20, n/4)`).
    pub k_star_grid: Option<Vec<usize>>,
    /// Seed for the derivative-free fallback's deterministic simplex jitter.
    pub seed: u64,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        OptimizerConfig {
            rho0: T::of(0.01),
            tol_obj: T::of(1e-10),
            tol_step: T::of(1e-8),
            max_iter: 200,
            ridge: T::of(1e-10),
            m: 5,
            degree: 3,
            knots: KnotRule::ScaledSpacing { c0: T::one() },
            m_tilde_grid: None,
            k_star_grid: None,
            seed: 0,
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > T::zero() && self.rho0 < T::one()) {
            return Err(Error::Config(format!(
                "rho0 must lie in (0, 1), got {}",
                self.rho0
            )));
        }
        if !(self.tol_obj > T::zero()) || !(self.tol_step > T::zero()) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.ridge >= T::zero()) {
            return Err(Error::Config("ridge floor must be non-negative".into()));
        }
        if self.m < 1 {
            return Err(Error::Config("profiling cut-off m must be at least 1".into()));
        }
        if self.degree < 1 {
            return Err(Error::Config("spline degree must be at least 1".into()));
        }
        match self.knots {
            KnotRule::ScaledSpacing { c0 } if !(c0 > T::zero()) => {
                Err(Error::Config("knot spacing scale must be positive".into()))
            }
            KnotRule::Spacing(h) if !(h > T::zero()) => {
                Err(Error::Config("knot spacing must be positive".into()))
            }
            KnotRule::Subintervals(0) => {
                Err(Error::Config("knot scheme needs at least one subinterval".into()))
            }
            _ => Ok(()),
        }
    }

    /// Resolves the knot rule at sample size `n`.
    pub(crate) fn knot_spec(&self, n: usize) -> KnotSpec<T> {
        match self.knots {
            KnotRule::ScaledSpacing { c0 } => {
                let exponent = T::one() / T::of_usize(2 * self.degree - 1);
                KnotSpec::Spacing(c0 * T::of_usize(n).powf(-exponent))
            }
            KnotRule::Spacing(h) => KnotSpec::Spacing(h),
            KnotRule::Subintervals(k) => KnotSpec::Subintervals(k),
        }
    }

    /// Default BIC candidate grid `lo..=min(20, n/4)` (never empty).
    fn default_grid(lo: usize, n: usize) -> Vec<usize> {
        let hi = (n / 4).min(20).max(lo);
        (lo..=hi).collect()
    }
}

/// Complete result of one fit.
#[derive(Debug, Clone)]
pub struct ProfileFit<T> {
    /// Linear coefficients α̂ (length q).
    pub alpha: Vec<T>,
    /// Index direction β̂ (unit norm, last entry ≥ ρ₀).
    pub beta: Vec<T>,
    /// First-stage link coefficients on `basis_first`.
    pub b_first: Vec<T>,
    pub basis_first: SplineBasis<T>,
    /// Slope-function score coefficients â_j, j ≤ m̃.
    pub a_coeffs: Vec<T>,
    /// Slope function â(t) on the training grid.
    pub a_curve: Vec<T>,
    /// Second-stage link coefficients on `basis_second`.
    pub b_second: Vec<T>,
    pub basis_second: SplineBasis<T>,
    /// Profiling cut-off actually used.
    pub m: usize,
    /// BIC-selected slope cut-off.
    pub m_tilde: usize,
    /// BIC-selected second-stage basis dimension.
    pub k_star: usize,
    /// Final profiled objective value.
    pub objective_value: T,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted objective values, starting from the initializer's.
    pub objective_trace: Vec<T>,
    /// Training grid (prediction needs its quadrature weights).
    pub grid: Grid<T>,
    /// Training mean curve, subtracted from new curves before integrating.
    pub mean_curve: Vec<T>,
}

impl<T: Real> ProfileFit<T> {
    /// Second-stage link ĝ(u); `u` outside the training range is clamped.
    pub fn link_value(&self, u: T) -> T {
        dot(&self.basis_second.eval(u), &self.b_second)
    }

    /// First-stage link g̃(u).
    pub fn first_stage_link(&self, u: T) -> T {
        dot(&self.basis_first.eval(u), &self.b_first)
    }
}

/// Runs the full estimation pipeline.
pub fn fit<T: Real>(data: &RegressionData<T>, config: &OptimizerConfig<T>) -> Result<ProfileFit<T>> {
    config.validate()?;
    let pieces = TildePieces::new(data, config)?;
    let init = optimize::linear_init(data, &pieces)?;
    let ctx = ProfileContext::with_pieces(data, config, pieces, &init.beta)?;
    let (alpha, beta, diag) = minimize_profile(&ctx, &init.alpha, &init.beta)?;

    let final_eval = ctx.eval(&alpha, &beta)?;
    let basis_first = final_eval.basis.clone();
    let b_first = final_eval.coeffs.clone();

    let jpos = positive_component_count(data);
    let m_tilde_grid = match &config.m_tilde_grid {
        Some(g) => {
            let g: Vec<usize> = g.clone();
            if g.is_empty() {
                return Err(Error::Config("slope cut-off grid is empty".into()));
            }
            g
        }
        None => OptimizerConfig::<T>::default_grid(1, data.n())
            .into_iter()
            .filter(|&c| c <= jpos)
            .collect(),
    };
    if m_tilde_grid.is_empty() {
        return Err(Error::Rank(
            "no positive eigenvalues available for the slope estimate".into(),
        ));
    }
    let m_tilde = select_m_tilde(data, &alpha, &beta, &basis_first, &b_first, &m_tilde_grid)?;
    let (a_coeffs, a_curve) = slope_estimate(data, &alpha, &beta, &basis_first, &b_first, m_tilde)?;

    let k_star_grid = match &config.k_star_grid {
        Some(g) => {
            if g.is_empty() {
                return Err(Error::Config("second-stage dimension grid is empty".into()));
            }
            g.clone()
        }
        None => OptimizerConfig::<T>::default_grid(config.degree + 1, data.n()),
    };
    let k_star = selection::select_k_star_with(ctx.pieces(), data, config, &alpha, &beta, &k_star_grid)?;
    let (b_second, basis_second) =
        selection::second_stage_with(ctx.pieces(), data, config, &alpha, &beta, k_star)?;

    Ok(ProfileFit {
        alpha,
        beta,
        b_first,
        basis_first,
        a_coeffs,
        a_curve,
        b_second,
        basis_second,
        m: ctx.m_used(),
        m_tilde,
        k_star,
        objective_value: final_eval.objective,
        iterations: diag.iterations,
        converged: diag.converged,
        objective_trace: diag.trace,
        grid: data.sample().grid().clone(),
        mean_curve: data.sample().mean_curve().to_vec(),
    })
}

/// Number of strictly positive eigenvalues usable for score-space division.
pub(crate) fn positive_component_count<T: Real>(data: &RegressionData<T>) -> usize {
    let lams = data.eigenvalues();
    let floor = lams.first().copied().unwrap_or(T::zero()) * T::of(1e-12);
    lams.iter().take_while(|&&l| l > floor).count()
}

/// Predicts the response for one new observation on the training grid.
///
/// Centers the new curve with the stored training mean, integrates it
/// against â, adds the linear term and the second-stage link at the
/// (range-clamped) index value.
pub fn predict<T: Real>(fit: &ProfileFit<T>, x_new: &[T], w_new: &[T], z_new: &[T]) -> Result<T> {
    if x_new.len() != fit.grid.len() {
        return Err(Error::Dimension(format!(
            "new curve has {} points but the training grid has {}",
            x_new.len(),
            fit.grid.len()
        )));
    }
    if w_new.len() != fit.alpha.len() {
        return Err(Error::Dimension(format!(
            "new scalar covariates have length {} but the fit has {}",
            w_new.len(),
            fit.alpha.len()
        )));
    }
    if z_new.len() != fit.beta.len() {
        return Err(Error::Dimension(format!(
            "new index covariates have length {} but the fit has {}",
            z_new.len(),
            fit.beta.len()
        )));
    }
    let centered: Vec<T> = x_new
        .iter()
        .zip(&fit.mean_curve)
        .map(|(&x, &m)| x - m)
        .collect();
    let functional = fit.grid.inner_product(&fit.a_curve, &centered)?;
    let linear = dot(w_new, &fit.alpha);
    let u = dot(z_new, &fit.beta);
    Ok(functional + linear + fit.link_value(u))
}
