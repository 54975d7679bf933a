//! Score-space smoother, tilde transform, and the profiled objective.

use crate::error::{Error, Result};
use crate::fpca::ScoreMatrix;
use crate::linalg::{dot, Cholesky, Mat};
use crate::real::Real;
use crate::splines::SplineBasis;

use super::{OptimizerConfig, RegressionData};

/// The n×n score-space smoother `ξ̃ = Ξ_m diag(1/λ̂₁..1/λ̂_m) Ξ_mᵀ`,
/// kept both dense and in factored form (the factored form applies the
/// associated tilde transform `v ↦ v − ξ̃v/n` in O(n·m) per column).
#[derive(Debug, Clone)]
pub struct SmootherMatrix<T> {
    mat: Mat<T>,
    scores_m: Mat<T>,
    scores_m_t: Mat<T>,
    inv_lambda: Vec<T>,
    m: usize,
}

/// Builds the smoother from the leading `m` score components.
///
/// Requires `m ≤ J` and `λ̂_j > 0` for every `j ≤ m`; with `m = 0` the
/// smoother is the zero matrix and the tilde transform is the identity.
pub fn smoother_matrix<T: Real>(scores: &ScoreMatrix<T>, m: usize) -> Result<SmootherMatrix<T>> {
    if m > scores.len() {
        return Err(Error::Dimension(format!(
            "smoother cut-off m = {} exceeds the {} available components",
            m,
            scores.len()
        )));
    }
    let lams = scores.eigen().eigenvalues();
    for j in 0..m {
        if !(lams[j] > T::zero()) {
            return Err(Error::Rank(format!(
                "eigenvalue {} is {} (not positive); reduce the smoother cut-off to {}",
                j + 1,
                lams[j],
                j
            )));
        }
    }
    let n = scores.n();
    let mut scores_m = Mat::zeros(n, m);
    for i in 0..n {
        scores_m.row_mut(i).copy_from_slice(&scores.row(i)[..m]);
    }
    let inv_lambda: Vec<T> = lams[..m].iter().map(|&l| T::one() / l).collect();
    let mut mat = Mat::zeros(n, n);
    for i in 0..n {
        for l in i..n {
            let mut s = T::zero();
            for j in 0..m {
                s += scores_m[(i, j)] * inv_lambda[j] * scores_m[(l, j)];
            }
            mat[(i, l)] = s;
            mat[(l, i)] = s;
        }
    }
    let scores_m_t = scores_m.transpose();
    Ok(SmootherMatrix {
        mat,
        scores_m,
        scores_m_t,
        inv_lambda,
        m,
    })
}

impl<T: Real> SmootherMatrix<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    /// Dense `ξ̃`.
    pub fn matrix(&self) -> &Mat<T> {
        &self.mat
    }

    /// `v − ξ̃v/n` via the factored form.
    pub fn tilde_vec(&self, v: &[T]) -> Vec<T> {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
        let mut t = self.scores_m.tr_matvec(v);
        for (tj, &il) in t.iter_mut().zip(&self.inv_lambda) {
            *tj *= il;
        }
        let u = self.scores_m.matvec(&t);
        let inv_n = T::one() / T::of_usize(n);
        v.iter().zip(&u).map(|(&vi, &ui)| vi - ui * inv_n).collect()
    }

    /// Column-wise tilde transform of a matrix.
    pub fn tilde_mat(&self, a: &Mat<T>) -> Mat<T> {
        let n = self.n();
        debug_assert_eq!(a.rows(), n);
        let mut t = self.scores_m_t.matmul(a);
        for j in 0..self.m {
            let il = self.inv_lambda[j];
            for v in t.row_mut(j) {
                *v *= il;
            }
        }
        let u = self.scores_m.matmul(&t);
        let inv_n = T::one() / T::of_usize(n);
        let mut out = a.clone();
        for (o, &ui) in out.data_mut().iter_mut().zip(u.data()) {
            *o = *o - ui * inv_n;
        }
        out
    }
}

/// Tilde-transformed regression blocks for a fixed basis design.
#[derive(Debug, Clone)]
pub struct TildeData<T> {
    /// Ỹ.
    pub y: Vec<T>,
    /// W̃ (n×q).
    pub w: Mat<T>,
    /// B̃ (n×K).
    pub b: Mat<T>,
    /// The untransformed basis design B (n×K).
    pub b_raw: Mat<T>,
}

/// Applies `v ↦ v − ξ̃v/n` to the response, each scalar-covariate column,
/// and each basis column.
pub fn tilde_transform<T: Real>(
    data: &RegressionData<T>,
    basis_design: &Mat<T>,
    smoother: &SmootherMatrix<T>,
) -> Result<TildeData<T>> {
    let n = data.n();
    if smoother.n() != n {
        return Err(Error::Dimension(format!(
            "smoother is {}×{0} but the sample size is {}",
            smoother.n(),
            n
        )));
    }
    if basis_design.rows() != n {
        return Err(Error::Dimension(format!(
            "basis design has {} rows but the sample size is {}",
            basis_design.rows(),
            n
        )));
    }
    let y = smoother.tilde_vec(data.y());
    let w = smoother.tilde_mat(data.w());
    let b = smoother.tilde_mat(basis_design);
    debug_assert!(
        factored_matches_dense(smoother, data.y(), &y),
        "factored tilde transform drifted from the dense smoother"
    );
    Ok(TildeData {
        y,
        w,
        b,
        b_raw: basis_design.clone(),
    })
}

#[cfg(debug_assertions)]
fn factored_matches_dense<T: Real>(sm: &SmootherMatrix<T>, v: &[T], got: &[T]) -> bool {
    let n = v.len();
    let inv_n = T::one() / T::of_usize(n);
    let mut scale = T::one();
    for &vi in v {
        scale = scale.max(vi.abs());
    }
    let tol = T::of(1e-10) * scale;
    for i in 0..n {
        let mut s = T::zero();
        for l in 0..n {
            s += sm.matrix()[(i, l)] * v[l];
        }
        if (v[i] - s * inv_n - got[i]).abs() > tol {
            return false;
        }
    }
    true
}

#[cfg(not(debug_assertions))]
#[allow(dead_code)]
fn factored_matches_dense<T: Real>(_sm: &SmootherMatrix<T>, _v: &[T], _got: &[T]) -> bool {
    true
}

/// Solves the ridged normal equations `(DᵀD + ρI) b = Dᵀt` with
/// `ρ = max(floor, 1e-12 · tr(DᵀD)/K)`, refining iteratively until the
/// normal-equation residual is at most `1e-8` (max norm, relative to the
/// right-hand-side scale). Returns the coefficients and the ridge used.
pub(crate) fn ridge_solve<T: Real>(
    design: &Mat<T>,
    target: &[T],
    floor: T,
) -> Result<(Vec<T>, T)> {
    let k = design.cols();
    let mut gram = design.gram();
    let mut trace = T::zero();
    for j in 0..k {
        trace += gram[(j, j)];
    }
    let ridge = floor.max(T::of(1e-12) * trace / T::of_usize(k.max(1)));
    for j in 0..k {
        gram[(j, j)] += ridge;
    }
    let chol = Cholesky::new(&gram).map_err(|e| {
        Error::Rank(format!(
            "profiled normal equations are singular even after ridge {ridge}: {e}"
        ))
    })?;
    let rhs = design.tr_matvec(target);
    let mut scale = T::one();
    for &r in &rhs {
        scale = scale.max(r.abs());
    }
    let tol = T::of(1e-8) * scale;
    let mut b = chol.solve(&rhs);
    let mut worst = T::zero();
    for _ in 0..4 {
        let mut resid = rhs.clone();
        let gb = gram.matvec(&b);
        for (r, g) in resid.iter_mut().zip(&gb) {
            *r -= *g;
        }
        worst = T::zero();
        for &r in &resid {
            worst = worst.max(r.abs());
        }
        if worst <= tol {
            break;
        }
        let corr = chol.solve(&resid);
        for (bj, c) in b.iter_mut().zip(&corr) {
            *bj += *c;
        }
    }
    if worst > tol {
        return Err(Error::Rank(format!(
            "inner solve is too ill-conditioned (condition estimate {}): \
             normal-equation residual {} exceeds {}",
            chol.condition_estimate(),
            worst,
            tol
        )));
    }
    Ok((b, ridge))
}

/// Profiled spline coefficients `b̃(α, β)` for the design in `tilde` at the
/// given α.
pub fn profile_coeffs<T: Real>(tilde: &TildeData<T>, alpha: &[T], ridge_floor: T) -> Result<Vec<T>> {
    if alpha.len() != tilde.w.cols() {
        return Err(Error::Dimension(format!(
            "alpha has length {} but there are {} scalar covariates",
            alpha.len(),
            tilde.w.cols()
        )));
    }
    let target = shifted_target(&tilde.y, &tilde.w, alpha);
    let (b, _) = ridge_solve(&tilde.b, &target, ridge_floor)?;
    Ok(b)
}

/// `ỹ − W̃α`.
fn shifted_target<T: Real>(y_t: &[T], w_t: &Mat<T>, alpha: &[T]) -> Vec<T> {
    let wa = w_t.matvec(alpha);
    y_t.iter().zip(&wa).map(|(&y, &v)| y - v).collect()
}

/// Evaluates the basis at each index value, one row per observation.
pub fn basis_design<T: Real>(basis: &SplineBasis<T>, u: &[T]) -> Mat<T> {
    let mut m = Mat::zeros(u.len(), basis.dim());
    for (i, &ui) in u.iter().enumerate() {
        basis.eval_into(ui, m.row_mut(i));
    }
    m
}

/// Cached per-fit quantities that do not depend on `(α, β)`.
#[derive(Debug, Clone)]
pub(crate) struct TildePieces<T> {
    pub smoother: SmootherMatrix<T>,
    pub y_t: Vec<T>,
    pub w_t: Mat<T>,
    /// Effective smoother cut-off: `config.m` capped at the number of
    /// strictly positive eigenvalues.
    pub m_eff: usize,
}

impl<T: Real> TildePieces<T> {
    pub fn new(data: &RegressionData<T>, config: &OptimizerConfig<T>) -> Result<Self> {
        let jpos = super::positive_component_count(data);
        let m_eff = config.m.min(jpos).min(data.scores().len());
        let smoother = smoother_matrix(data.scores(), m_eff)?;
        let y_t = smoother.tilde_vec(data.y());
        let w_t = smoother.tilde_mat(data.w());
        Ok(TildePieces {
            smoother,
            y_t,
            w_t,
            m_eff,
        })
    }
}

/// Everything `eval`/`gradient` need, built once per fit: the smoother and
/// the tilde-transformed response and scalar covariates, plus the frozen
/// subinterval count for the index basis (knot *positions* still track each
/// candidate β's index range; only the count is frozen so the objective
/// stays comparable across iterations).
#[derive(Debug)]
pub struct ProfileContext<'a, T> {
    data: &'a RegressionData<T>,
    config: &'a OptimizerConfig<T>,
    pieces: TildePieces<T>,
    subintervals: usize,
}

/// One objective evaluation: the value plus the pieces the gradient and the
/// downstream stages reuse.
#[derive(Debug, Clone)]
pub struct ProfileEval<T> {
    /// `G_n(α, β) = (1/n) ‖ỹ − W̃α − B̃ b̃‖²`.
    pub objective: T,
    /// The index basis used (knots over this β's index range).
    pub basis: SplineBasis<T>,
    /// Index values `u_i`.
    pub u: Vec<T>,
    /// Profiled spline coefficients.
    pub coeffs: Vec<T>,
    /// Tilde-scale residuals `ỹ − W̃α − B̃ b̃`.
    pub resid: Vec<T>,
}

impl<'a, T: Real> ProfileContext<'a, T> {
    /// Builds the context, freezing the knot count from `knot_beta`'s index
    /// range.
    pub fn new(
        data: &'a RegressionData<T>,
        config: &'a OptimizerConfig<T>,
        knot_beta: &[T],
    ) -> Result<Self> {
        config.validate()?;
        let pieces = TildePieces::new(data, config)?;
        ProfileContext::with_pieces(data, config, pieces, knot_beta)
    }

    pub(crate) fn with_pieces(
        data: &'a RegressionData<T>,
        config: &'a OptimizerConfig<T>,
        pieces: TildePieces<T>,
        knot_beta: &[T],
    ) -> Result<Self> {
        let u0 = data.index_values(knot_beta);
        let basis0 = SplineBasis::build_index_knots(&u0, config.degree, config.knot_spec(data.n()))?;
        Ok(ProfileContext {
            data,
            config,
            pieces,
            subintervals: basis0.subintervals(),
        })
    }

    pub fn data(&self) -> &RegressionData<T> {
        self.data
    }

    pub fn config(&self) -> &OptimizerConfig<T> {
        self.config
    }

    /// Effective smoother cut-off in use.
    pub fn m_used(&self) -> usize {
        self.pieces.m_eff
    }

    pub(crate) fn pieces(&self) -> &TildePieces<T> {
        &self.pieces
    }

    fn check_params(&self, alpha: &[T], beta: &[T]) -> Result<()> {
        if alpha.len() != self.data.q() {
            return Err(Error::Dimension(format!(
                "alpha has length {} but there are {} scalar covariates",
                alpha.len(),
                self.data.q()
            )));
        }
        if beta.len() != self.data.d() {
            return Err(Error::Dimension(format!(
                "beta has length {} but there are {} index covariates",
                beta.len(),
                self.data.d()
            )));
        }
        let norm = dot(beta, beta).sqrt();
        if (norm - T::one()).abs() > T::of(1e-8) {
            return Err(Error::Precondition(format!(
                "beta must have unit norm, got ‖β‖ = {norm}"
            )));
        }
        let last = beta[beta.len() - 1];
        if last < self.config.rho0 - T::of(1e-12) {
            return Err(Error::Precondition(format!(
                "last index coefficient {} is below the bound {}",
                last, self.config.rho0
            )));
        }
        Ok(())
    }

    /// Profiled objective at `(α, β)`, rebuilding the basis endpoints from
    /// this β's index range.
    pub fn eval(&self, alpha: &[T], beta: &[T]) -> Result<ProfileEval<T>> {
        self.check_params(alpha, beta)?;
        let u = self.data.index_values(beta);
        let basis = SplineBasis::build_index_knots(
            &u,
            self.config.degree,
            crate::splines::KnotSpec::Subintervals(self.subintervals),
        )?;
        self.eval_with_basis_at(alpha, &u, basis)
    }

    /// Objective at `(α, β)` with an explicitly supplied (frozen) basis;
    /// index values outside its range are clamped. Used where the basis
    /// must not move with β, e.g. finite-difference derivative checks.
    pub fn eval_with_basis(
        &self,
        alpha: &[T],
        beta: &[T],
        basis: &SplineBasis<T>,
    ) -> Result<ProfileEval<T>> {
        self.check_params(alpha, beta)?;
        let u = self.data.index_values(beta);
        self.eval_with_basis_at(alpha, &u, basis.clone())
    }

    fn eval_with_basis_at(
        &self,
        alpha: &[T],
        u: &[T],
        basis: SplineBasis<T>,
    ) -> Result<ProfileEval<T>> {
        let n = self.data.n();
        let b_raw = basis_design(&basis, u);
        let b_t = self.pieces.smoother.tilde_mat(&b_raw);
        let target = shifted_target(&self.pieces.y_t, &self.pieces.w_t, alpha);
        let (coeffs, _) = ridge_solve(&b_t, &target, self.config.ridge)?;
        let fitted = b_t.matvec(&coeffs);
        let resid: Vec<T> = target
            .iter()
            .zip(&fitted)
            .map(|(&t, &f)| t - f)
            .collect();
        let objective = dot(&resid, &resid) / T::of_usize(n);
        Ok(ProfileEval {
            objective,
            basis,
            u: u.to_vec(),
            coeffs,
            resid,
        })
    }

    /// Analytic gradient of the profiled objective with respect to
    /// `θ = (α, β₁..β_{d−1})`, with `β_d = √(1 − ‖β₋d‖²)` and the spline
    /// coefficients held at their profiled values (their first-order
    /// contribution vanishes at the inner minimum; knot positions are
    /// treated as locally fixed). Index values outside the basis range see
    /// the flat clamped extension, so their slope contribution is zero.
    pub fn gradient(&self, ev: &ProfileEval<T>, beta: &[T]) -> Result<Vec<T>> {
        let n = self.data.n();
        let q = self.data.q();
        let d = self.data.d();
        let minus_two_over_n = T::of(-2.0) / T::of_usize(n);

        let mut g = vec![T::zero(); q + d - 1];
        let galpha = self.pieces.w_t.tr_matvec(&ev.resid);
        for (gj, &v) in g[..q].iter_mut().zip(&galpha) {
            *gj = v * minus_two_over_n;
        }

        let (lo, hi) = (ev.basis.lo(), ev.basis.hi());
        let mut sprime = vec![T::zero(); n];
        for i in 0..n {
            if ev.u[i] < lo || ev.u[i] > hi {
                continue;
            }
            let dvals = ev.basis.eval_deriv(ev.u[i], 1)?;
            sprime[i] = dot(&dvals, &ev.coeffs);
        }
        let bd = beta[d - 1];
        let z = self.data.z();
        let mut v = vec![T::zero(); n];
        for r in 0..d - 1 {
            let ratio = beta[r] / bd;
            for i in 0..n {
                v[i] = sprime[i] * (z[(i, r)] - z[(i, d - 1)] * ratio);
            }
            let vt = self.pieces.smoother.tilde_vec(&v);
            g[q + r] = dot(&ev.resid, &vt) * minus_two_over_n;
        }
        Ok(g)
    }
}

/// Standalone profiled objective `G_n(α, β)`: builds the smoother, the
/// index basis (knot count from the configured rule at this β), profiles
/// the spline coefficients, and returns the mean squared tilde residual.
pub fn objective<T: Real>(
    data: &RegressionData<T>,
    config: &OptimizerConfig<T>,
    alpha: &[T],
    beta: &[T],
) -> Result<T> {
    let ctx = ProfileContext::new(data, config, beta)?;
    Ok(ctx.eval(alpha, beta)?.objective)
}
