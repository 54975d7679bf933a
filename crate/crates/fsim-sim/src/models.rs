//! Seeded synthetic data for exercising the estimator.
//!
//! Two data models share the same cosine expansion for the random curves,
//! `X_i(t) = Σ_{j≤50} ξ_ij φ_j(t)` with `φ₁ ≡ 1` and
//! `φ_j(t) = √2 cos((j−1)πt)`, and the same slope function
//! `a(t) = Σ_{j≤50} a_j φ_j(t)`. They differ in the score variances, the
//! scalar covariates, and the link applied to the index:
//!
//! * [`Model::M41`]: sinusoidal link, one binary scalar covariate with
//!   alternating parity, score variances `j^{−δ}`.
//! * [`Model::M42`]: affine link, two Gaussian scalar covariates correlated
//!   with the curve scores, a clustered eigenvalue scheme.
//!
//! Every draw is keyed by a single 64-bit seed; separate substreams feed the
//! scores, the index covariates, the scalar covariates, and the noise, so the
//! generated numbers do not depend on field order or sample size tweaks in
//! unrelated blocks. The response's functional term is computed exactly in
//! score space (`Σ a_j ξ_ij`), not by quadrature, so the stored noiseless
//! values carry no discretization error.

use std::fmt;
use std::str::FromStr;

use fsim_core::linalg::{dot, Mat};
use fsim_core::{FunctionalSample, Grid, RegressionData, DEFAULT_GRID_LEN};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng;

/// Number of cosine modes in the curve and slope expansions.
pub const MODE_COUNT: usize = 50;

/// Substream tags, one per independent random block.
const TAG_SCORES: u64 = 1;
const TAG_INDEX: u64 = 2;
const TAG_NOISE: u64 = 3;
const TAG_SCALAR: u64 = 4;

/// Which synthetic data model to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Sinusoidal link, binary scalar covariate, power-decay eigenvalues.
    #[serde(rename = "m41")]
    M41,
    /// Affine link, Gaussian scalar covariates tied to the curve scores.
    #[serde(rename = "m42")]
    M42,
}

impl Model {
    /// Returns `(q, d)`: the scalar-covariate and index-covariate counts.
    pub fn dims(self) -> (usize, usize) {
        match self {
            Model::M41 => (1, 3),
            Model::M42 => (2, 3),
        }
    }

    /// Default noise standard deviation for this model.
    pub fn default_noise_sd(self) -> f64 {
        match self {
            Model::M41 => 0.5,
            Model::M42 => 1.0,
        }
    }

    /// True linear coefficients α₀.
    pub fn true_alpha(self) -> Vec<f64> {
        match self {
            Model::M41 => vec![0.3],
            Model::M42 => vec![-2.0, 1.5],
        }
    }

    /// True index direction β₀ (unit norm, positive last entry).
    pub fn true_beta(self) -> Vec<f64> {
        match self {
            Model::M41 => {
                let r = 1.0 / 3.0_f64.sqrt();
                vec![r, r, r]
            }
            Model::M42 => vec![1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0],
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::M41 => "m41",
            Model::M42 => "m42",
        })
    }
}

impl FromStr for Model {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m41" => Ok(Model::M41),
            "m42" => Ok(Model::M42),
            other => Err(SimError::Spec(format!(
                "unknown model '{other}' (expected m41 or m42)"
            ))),
        }
    }
}

/// The true link function, stored in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinkTruth {
    /// `g(u) = sin(π(u − e)/(f − e))`.
    Sinusoidal { e: f64, f: f64 },
    /// `g(u) = slope·u + intercept`.
    Affine { slope: f64, intercept: f64 },
}

impl LinkTruth {
    /// Evaluates the true link at `u`.
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            LinkTruth::Sinusoidal { e, f } => (std::f64::consts::PI * (u - e) / (f - e)).sin(),
            LinkTruth::Affine { slope, intercept } => slope * u + intercept,
        }
    }
}

/// The generating parameters behind one simulated dataset, kept alongside
/// the draw so error metrics can compare estimates against them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthBundle {
    /// Which model produced the data.
    pub model: Model,
    /// True linear coefficients α₀.
    pub alpha: Vec<f64>,
    /// True index direction β₀ (unit norm, positive last entry).
    pub beta: Vec<f64>,
    /// Mode coefficients `a_j` of the slope function.
    pub slope_coeffs: Vec<f64>,
    /// The slope function `a(t)` evaluated on the generation grid.
    pub slope_curve: Vec<f64>,
    /// The true link.
    pub link: LinkTruth,
    /// Noise standard deviation used for this draw.
    pub noise_sd: f64,
}

impl TruthBundle {
    /// True link value at index `u`.
    pub fn link_value(&self, u: f64) -> f64 {
        self.link.value(u)
    }
}

/// One simulated dataset: the observed blocks plus the generating truth.
///
/// `curves` holds the raw (uncentered) curves; [`SimulatedData::to_regression_data`]
/// centers them and attaches principal-component scores for fitting. The
/// `noiseless` vector stores the error-free regression values, the reference
/// for prediction-error metrics.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    /// Observed responses (noiseless + noise).
    pub y: Vec<f64>,
    /// Scalar covariates, one row per observation.
    pub w: Mat<f64>,
    /// Index covariates, one row per observation.
    pub z: Mat<f64>,
    /// Raw curves on the generation grid.
    pub curves: FunctionalSample,
    /// Error-free regression values.
    pub noiseless: Vec<f64>,
    /// Generating parameters.
    pub truth: TruthBundle,
}

impl SimulatedData {
    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Builds the estimator's input bundle: centers the curves and computes
    /// principal-component scores.
    pub fn to_regression_data(&self) -> Result<RegressionData> {
        Ok(RegressionData::from_sample(
            self.y.clone(),
            self.w.clone(),
            self.z.clone(),
            self.curves.clone(),
        )?)
    }
}

/// Slope-mode coefficients: `a₁ = 0.3`, `a_j = 4(−1)^{j+1} j^{−2}` for `j ≥ 2`.
fn slope_modes() -> Vec<f64> {
    (1..=MODE_COUNT)
        .map(|j| {
            if j == 1 {
                0.3
            } else {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                4.0 * sign / ((j * j) as f64)
            }
        })
        .collect()
}

/// Cosine basis matrix: row `j − 1` holds `φ_j` on the grid, `φ₁ ≡ 1`,
/// `φ_j(t) = √2 cos((j−1)πt)`.
fn cosine_basis(grid: &Grid) -> Mat<f64> {
    let root2 = std::f64::consts::SQRT_2;
    Mat::from_fn(MODE_COUNT, grid.len(), |j, g| {
        if j == 0 {
            1.0
        } else {
            root2 * (j as f64 * std::f64::consts::PI * grid.points()[g]).cos()
        }
    })
}

/// Score standard deviations `j^{−δ/2}` (variances `j^{−δ}`).
fn score_sds_power(delta: f64) -> Vec<f64> {
    (1..=MODE_COUNT)
        .map(|j| (j as f64).powf(-delta / 2.0))
        .collect()
}

/// Clustered eigenvalue scheme: `λ₁ = 1`; `λ_j = 0.22²(1 − 0.0001j)²` for
/// `2 ≤ j ≤ 4`; `λ_{5j+k} = 0.22²((5j)^{−δ/2} − 0.0001k)²` for `j ≥ 1`,
/// `0 ≤ k ≤ 4`.
pub(crate) fn clustered_eigenvalue(j: usize, delta: f64) -> f64 {
    assert!(j >= 1, "eigenvalue index is 1-based");
    if j == 1 {
        1.0
    } else if j <= 4 {
        let base = 0.22 * (1.0 - 0.0001 * j as f64);
        base * base
    } else {
        let block = (j / 5) as f64;
        let offset = (j % 5) as f64;
        let base = 0.22 * ((5.0 * block).powf(-delta / 2.0) - 0.0001 * offset);
        base * base
    }
}

fn score_sds_clustered(delta: f64) -> Vec<f64> {
    (1..=MODE_COUNT)
        .map(|j| clustered_eigenvalue(j, delta).sqrt())
        .collect()
}

fn check_args(n: usize, delta: f64, grid_len: usize, noise_sd: f64) -> Result<()> {
    if n == 0 {
        return Err(SimError::Spec("sample size must be at least 1".into()));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(SimError::Spec(format!(
            "decay exponent must be a positive finite number, got {delta}"
        )));
    }
    if grid_len < 2 {
        return Err(SimError::Spec(format!(
            "grid needs at least 2 points, got {grid_len}"
        )));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(SimError::Spec(format!(
            "noise standard deviation must be finite and nonnegative, got {noise_sd}"
        )));
    }
    Ok(())
}

/// Draws the `n × 50` score matrix with independent `N(0, sd_j²)` columns.
fn draw_scores(seed: u64, n: usize, sds: &[f64]) -> Mat<f64> {
    let mut r = rng::stream(seed, 0, TAG_SCORES);
    let mut xi = Mat::zeros(n, sds.len());
    for i in 0..n {
        let row = xi.row_mut(i);
        for (x, &sd) in row.iter_mut().zip(sds) {
            let z: f64 = r.sample(StandardNormal);
            *x = sd * z;
        }
    }
    xi
}

/// Draws `n × d` independent uniforms on `[0, 1)`.
fn draw_uniform_index(seed: u64, n: usize, d: usize) -> Mat<f64> {
    let mut r = rng::stream(seed, 0, TAG_INDEX);
    let mut z = Mat::zeros(n, d);
    for i in 0..n {
        for x in z.row_mut(i) {
            *x = r.random::<f64>();
        }
    }
    z
}

/// Draws `n` independent `N(0, sd²)` noise terms.
fn draw_noise(seed: u64, n: usize, sd: f64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0, TAG_NOISE);
    (0..n)
        .map(|_| {
            let z: f64 = r.sample(StandardNormal);
            sd * z
        })
        .collect()
}

/// Assembles the shared pieces: curves from scores, index values, truth curve.
struct CurveBlock {
    xi: Mat<f64>,
    curves: FunctionalSample,
    slope_coeffs: Vec<f64>,
    slope_curve: Vec<f64>,
}

fn build_curves(seed: u64, n: usize, grid_len: usize, sds: &[f64]) -> Result<CurveBlock> {
    let grid = Grid::uniform(grid_len, 0.0, 1.0)?;
    let basis = cosine_basis(&grid);
    let xi = draw_scores(seed, n, sds);
    let values = xi.matmul(&basis);
    let curves = FunctionalSample::new(grid, values)?;
    let slope_coeffs = slope_modes();
    let slope_curve = basis.tr_matvec(&slope_coeffs);
    Ok(CurveBlock {
        xi,
        curves,
        slope_coeffs,
        slope_curve,
    })
}

/// Draws from the sinusoidal-link model with the default grid (101 points)
/// and noise level (σ = 0.5).
///
/// The data equation is
/// `Y_i = ∫ a(t)X_i(t)dt + 0.3·W_i + sin(π(Z_iᵀβ₀ − E)/(F − E)) + ε_i`
/// with `β₀ = (1,1,1)/√3`, `E = √3/2 − 1.645/√12`, `F = √3/2 + 1.645/√12`,
/// `W_i` alternating 0, 1, 0, 1, … and `Z_i` uniform on `[0,1]³`; the score
/// variances decay as `j^{−δ}`.
pub fn generate_model41(n: usize, delta: f64, seed: u64) -> Result<SimulatedData> {
    generate_model41_with(n, delta, seed, DEFAULT_GRID_LEN, Model::M41.default_noise_sd())
}

/// Sinusoidal-link model with explicit grid size and noise level.
pub fn generate_model41_with(
    n: usize,
    delta: f64,
    seed: u64,
    grid_len: usize,
    noise_sd: f64,
) -> Result<SimulatedData> {
    check_args(n, delta, grid_len, noise_sd)?;
    let block = build_curves(seed, n, grid_len, &score_sds_power(delta))?;

    let alpha0 = Model::M41.true_alpha();
    let beta0 = Model::M41.true_beta();
    let root3 = 3.0_f64.sqrt();
    let e = root3 / 2.0 - 1.645 / 12.0_f64.sqrt();
    let f = root3 / 2.0 + 1.645 / 12.0_f64.sqrt();
    let link = LinkTruth::Sinusoidal { e, f };

    // First observation is index 1 (odd), so the covariate starts at 0.
    let w = Mat::from_fn(n, 1, |i, _| if (i + 1) % 2 == 0 { 1.0 } else { 0.0 });
    let z = draw_uniform_index(seed, n, 3);
    let eps = draw_noise(seed, n, noise_sd);

    let mut noiseless = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let functional = dot(block.xi.row(i), &block.slope_coeffs);
        let u = dot(z.row(i), &beta0);
        let value = functional + dot(w.row(i), &alpha0) + link.value(u);
        noiseless.push(value);
        y.push(value + eps[i]);
    }

    Ok(SimulatedData {
        y,
        w,
        z,
        curves: block.curves,
        noiseless,
        truth: TruthBundle {
            model: Model::M41,
            alpha: alpha0,
            beta: beta0,
            slope_coeffs: block.slope_coeffs,
            slope_curve: block.slope_curve,
            link,
            noise_sd,
        },
    })
}

/// Draws from the affine-link model with the default grid (101 points) and
/// noise level (σ = 1).
///
/// The data equation is
/// `Y_i = ∫ a(t)X_i(t)dt − 2W_{i1} + 1.5W_{i2} − 2Z_iᵀβ₀ + 5 + ε_i`
/// with `β₀ = (1,2,2)/3` and `Z_i` uniform on `[0,1]³`. The scalar
/// covariates are tied to the curve through
/// `W_{ik} = Σ_{j≤50} k·j^{−2}·ξ_ij + V_ik`, with `V_{i1} ~ N(−1, 2²)` and
/// `V_{i2} ~ N(2, 3²)` independent of the scores. The score variances follow
/// the clustered scheme of [`clustered_eigenvalue`].
pub fn generate_model42(n: usize, delta: f64, seed: u64) -> Result<SimulatedData> {
    generate_model42_with(n, delta, seed, DEFAULT_GRID_LEN, Model::M42.default_noise_sd())
}

/// Affine-link model with explicit grid size and noise level.
pub fn generate_model42_with(
    n: usize,
    delta: f64,
    seed: u64,
    grid_len: usize,
    noise_sd: f64,
) -> Result<SimulatedData> {
    check_args(n, delta, grid_len, noise_sd)?;
    let block = build_curves(seed, n, grid_len, &score_sds_clustered(delta))?;

    let alpha0 = Model::M42.true_alpha();
    let beta0 = Model::M42.true_beta();
    let link = LinkTruth::Affine {
        slope: -2.0,
        intercept: 5.0,
    };

    // W_{ik} = Σ_j k·j^{−2}·ξ_ij + V_ik, k = 1, 2.
    let inverse_squares: Vec<f64> = (1..=MODE_COUNT).map(|j| 1.0 / ((j * j) as f64)).collect();
    let mut scalar_rng = rng::stream(seed, 0, TAG_SCALAR);
    let mut w = Mat::zeros(n, 2);
    for i in 0..n {
        let shared = dot(block.xi.row(i), &inverse_squares);
        let v1: f64 = scalar_rng.sample::<f64, _>(StandardNormal) * 2.0 - 1.0;
        let v2: f64 = scalar_rng.sample::<f64, _>(StandardNormal) * 3.0 + 2.0;
        let row = w.row_mut(i);
        row[0] = shared + v1;
        row[1] = 2.0 * shared + v2;
    }

    let z = draw_uniform_index(seed, n, 3);
    let eps = draw_noise(seed, n, noise_sd);

    let mut noiseless = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let functional = dot(block.xi.row(i), &block.slope_coeffs);
        let u = dot(z.row(i), &beta0);
        let value = functional + dot(w.row(i), &alpha0) + link.value(u);
        noiseless.push(value);
        y.push(value + eps[i]);
    }

    Ok(SimulatedData {
        y,
        w,
        z,
        curves: block.curves,
        noiseless,
        truth: TruthBundle {
            model: Model::M42,
            alpha: alpha0,
            beta: beta0,
            slope_coeffs: block.slope_coeffs,
            slope_curve: block.slope_curve,
            link,
            noise_sd,
        },
    })
}

/// Dispatches on the model tag.
pub fn generate(
    model: Model,
    n: usize,
    delta: f64,
    seed: u64,
    grid_len: usize,
    noise_sd: f64,
) -> Result<SimulatedData> {
    match model {
        Model::M41 => generate_model41_with(n, delta, seed, grid_len, noise_sd),
        Model::M42 => generate_model42_with(n, delta, seed, grid_len, noise_sd),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Recovers score column `j` (1-based) by quadrature against `φ_j`;
    /// exact for these cosine curves because the trapezoid rule on a uniform
    /// grid integrates every product mode without error.
    fn quadrature_scores(data: &SimulatedData, j: usize) -> Vec<f64> {
        let grid = data.curves.grid();
        let basis = cosine_basis(grid);
        let phi = basis.row(j - 1);
        (0..data.n())
            .map(|i| grid.inner_product(data.curves.curve(i), phi).unwrap())
            .collect()
    }

    fn sample_var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn slope_modes_match_stated_sequence() {
        let a = slope_modes();
        assert_eq!(a.len(), MODE_COUNT);
        assert_eq!(a[0], 0.3);
        assert_eq!(a[1], -1.0); // 4·(−1)³/4
        assert_eq!(a[2], 4.0 / 9.0);
        assert_eq!(a[3], -0.25); // 4/16 with negative sign
    }

    #[test]
    fn clustered_eigenvalues_match_stated_scheme() {
        let l2 = clustered_eigenvalue(2, 1.5);
        let expected = (0.22 * (1.0 - 0.0002)) * (0.22 * (1.0 - 0.0002));
        assert_eq!(l2, expected);
        assert!((l2 - 0.0484).abs() < 2e-5);
        assert_eq!(clustered_eigenvalue(1, 1.5), 1.0);
        // j = 5 is block 1, offset 0.
        let l5 = clustered_eigenvalue(5, 1.5);
        let base = 0.22 * 5.0_f64.powf(-0.75);
        assert!((l5 - base * base).abs() < 1e-15);
        // j = 9 is block 1, offset 4; j = 50 is block 10, offset 0.
        let l9 = clustered_eigenvalue(9, 1.5);
        let base9 = 0.22 * (5.0_f64.powf(-0.75) - 0.0004);
        assert!((l9 - base9 * base9).abs() < 1e-15);
        let l50 = clustered_eigenvalue(50, 1.5);
        let base50 = 0.22 * 50.0_f64.powf(-0.75);
        assert!((l50 - base50 * base50).abs() < 1e-15);
    }

    #[test]
    fn affine_model_direction_has_unit_norm() {
        let data = generate_model42(5, 1.5, 9).unwrap();
        let nrm2: f64 = data.truth.beta.iter().map(|b| b * b).sum();
        assert!((nrm2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn same_seed_reproduces_bit_identical_draws() {
        for model in [Model::M41, Model::M42] {
            let a = generate(model, 23, 1.5, 77, 41, model.default_noise_sd()).unwrap();
            let b = generate(model, 23, 1.5, 77, 41, model.default_noise_sd()).unwrap();
            assert_eq!(
                a.y.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.y.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            assert_eq!(a.curves.values().data(), b.curves.values().data());
            assert_eq!(a.w.data(), b.w.data());
            assert_eq!(a.z.data(), b.z.data());

            let c = generate(model, 23, 1.5, 78, 41, model.default_noise_sd()).unwrap();
            assert_ne!(
                a.y.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                c.y.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn scalar_covariate_alternates_starting_at_zero() {
        let data = generate_model41(7, 1.5, 3).unwrap();
        let col: Vec<f64> = (0..7).map(|i| data.w.row(i)[0]).collect();
        assert_eq!(col, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn index_covariates_live_in_unit_cube() {
        let data = generate_model41(200, 1.5, 11).unwrap();
        for i in 0..200 {
            for &v in data.z.row(i) {
                assert!((0.0..1.0).contains(&v));
            }
        }
    }

    #[test]
    fn second_score_variance_matches_power_decay() {
        let delta = 1.5;
        let data = generate_model41(10_000, delta, 101).unwrap();
        let xi2 = quadrature_scores(&data, 2);
        let target = 2.0_f64.powf(-delta);
        let v = sample_var(&xi2);
        assert!(
            (v - target).abs() <= 0.05 * target,
            "var {v} vs target {target}"
        );
    }

    #[test]
    fn second_scalar_covariate_mean_matches_clustered_model() {
        let data = generate_model42(10_000, 1.5, 5).unwrap();
        // Strip the score-driven part to recover the independent Gaussian
        // component with mean 2 and sd 3.
        let inverse_squares: Vec<f64> =
            (1..=MODE_COUNT).map(|j| 1.0 / ((j * j) as f64)).collect();
        let basis = cosine_basis(data.curves.grid());
        let mut sum = 0.0;
        for i in 0..data.n() {
            let mut shared = 0.0;
            for (j, c) in inverse_squares.iter().enumerate() {
                let xi = data
                    .curves
                    .grid()
                    .inner_product(data.curves.curve(i), basis.row(j))
                    .unwrap();
                shared += c * xi;
            }
            sum += data.w.row(i)[1] - 2.0 * shared;
        }
        let mean = sum / data.n() as f64;
        assert!((mean - 2.0).abs() <= 0.09, "mean {mean}");
    }

    #[test]
    fn noise_variance_matches_default_levels() {
        for (model, sd) in [(Model::M41, 0.5), (Model::M42, 1.0)] {
            let data = generate(model, 10_000, 1.5, 13, DEFAULT_GRID_LEN, sd).unwrap();
            let eps: Vec<f64> = data
                .y
                .iter()
                .zip(&data.noiseless)
                .map(|(y, t)| y - t)
                .collect();
            let v = sample_var(&eps);
            let bound = 3.0 * sd * sd * (2.0 / (eps.len() as f64 - 1.0)).sqrt();
            assert!((v - sd * sd).abs() <= bound, "var {v} vs {}", sd * sd);
        }
    }

    #[test]
    fn zero_noise_makes_response_equal_truth() {
        let data = generate_model41_with(31, 1.5, 4, 101, 0.0).unwrap();
        for (y, t) in data.y.iter().zip(&data.noiseless) {
            assert_eq!(y.to_bits(), t.to_bits());
        }
    }

    #[test]
    fn stored_truth_matches_model_equation_under_quadrature() {
        // The functional term is generated in score space; integrating the
        // slope curve against the raw curves with the estimator's trapezoid
        // rule must reproduce it to round-off.
        for model in [Model::M41, Model::M42] {
            let data = generate(model, 37, 1.5, 21, DEFAULT_GRID_LEN, model.default_noise_sd())
                .unwrap();
            let grid = data.curves.grid();
            for i in 0..data.n() {
                let functional = grid
                    .inner_product(&data.truth.slope_curve, data.curves.curve(i))
                    .unwrap();
                let linear = dot(data.w.row(i), &data.truth.alpha);
                let u = dot(data.z.row(i), &data.truth.beta);
                let value = functional + linear + data.truth.link_value(u);
                assert!(
                    (value - data.noiseless[i]).abs() <= 1e-10,
                    "row {i}: {} vs {}",
                    value,
                    data.noiseless[i]
                );
            }
        }
    }

    #[test]
    fn rejects_unusable_arguments() {
        assert!(matches!(
            generate_model41(0, 1.5, 1),
            Err(SimError::Spec(_))
        ));
        assert!(matches!(
            generate_model41_with(10, 0.0, 1, 101, 0.5),
            Err(SimError::Spec(_))
        ));
        assert!(matches!(
            generate_model41_with(10, 1.5, 1, 1, 0.5),
            Err(SimError::Spec(_))
        ));
        assert!(matches!(
            generate_model41_with(10, 1.5, 1, 101, -0.5),
            Err(SimError::Spec(_))
        ));
    }

    #[test]
    fn regression_bundle_centers_curves() {
        let data = generate_model41(40, 1.5, 8).unwrap();
        let reg = data.to_regression_data().unwrap();
        assert!(reg.sample().mean_removed());
        assert_eq!(reg.n(), 40);
        assert_eq!(reg.q(), 1);
        assert_eq!(reg.d(), 3);
    }

    #[test]
    fn model_tags_round_trip_through_strings() {
        assert_eq!("m41".parse::<Model>().unwrap(), Model::M41);
        assert_eq!("M42".parse::<Model>().unwrap(), Model::M42);
        assert!("m43".parse::<Model>().is_err());
        assert_eq!(Model::M41.to_string(), "m41");
    }
}
