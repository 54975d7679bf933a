//! Functional covariates observed on a shared grid.
//!
//! Curves live on one common strictly increasing grid; integrals are
//! trapezoidal quadrature sums, which are exact on the piecewise-linear
//! interpolants the loader produces by default, so interpolation and
//! quadrature error never compound.

use std::io::Read as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::real::Real;

/// Ordered evaluation grid over a bounded interval, with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// Builds a grid from strictly increasing points (length ≥ 2).
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Dimension(format!(
                "grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::Format(format!(
                    "grid points must be finite and strictly increasing; violation at index {}",
                    i + 1
                )));
            }
        }
        let g = points.len();
        let half = T::of(0.5);
        let mut weights = vec![T::zero(); g];
        weights[0] = (points[1] - points[0]) * half;
        weights[g - 1] = (points[g - 1] - points[g - 2]) * half;
        for i in 1..g - 1 {
            weights[i] = (points[i + 1] - points[i - 1]) * half;
        }
        Ok(Grid { points, weights })
    }

    /// Equispaced grid of `g` points on `[lo, hi]`.
    pub fn uniform(g: usize, lo: T, hi: T) -> Result<Self> {
        if g < 2 {
            return Err(Error::Dimension(format!(
                "grid needs at least 2 points, got {g}"
            )));
        }
        if !(lo < hi) {
            return Err(Error::Format(format!(
                "grid interval must have positive width, got [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / T::of_usize(g - 1);
        let points = (0..g)
            .map(|i| {
                if i == g - 1 {
                    hi
                } else {
                    lo + step * T::of_usize(i)
                }
            })
            .collect();
        Grid::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn min(&self) -> T {
        self.points[0]
    }

    pub fn max(&self) -> T {
        *self.points.last().expect("nonempty grid")
    }

    /// Trapezoidal L2 inner product of two functions given by grid values.
    pub fn inner_product(&self, f: &[T], g: &[T]) -> Result<T> {
        if f.len() != self.len() || g.len() != self.len() {
            return Err(Error::Dimension(format!(
                "inner product needs two length-{} vectors, got {} and {}",
                self.len(),
                f.len(),
                g.len()
            )));
        }
        Ok(self.weighted_dot(f, g))
    }

    /// L2 norm of a function given by grid values.
    pub fn norm(&self, f: &[T]) -> Result<T> {
        Ok(self.inner_product(f, f)?.sqrt())
    }

    /// Unchecked quadrature sum for internal hot paths.
    pub(crate) fn weighted_dot(&self, f: &[T], g: &[T]) -> T {
        debug_assert_eq!(f.len(), self.len());
        debug_assert_eq!(g.len(), self.len());
        // Grouped as w·(f·g) so the quadrature is exactly symmetric in f, g.
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(&w, (&a, &b))| w * (a * b))
            .sum()
    }
}

/// Interpolation rule for moving curves onto a new grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMethod {
    /// Exact piecewise-linear interpolation.
    Linear,
    /// Natural interpolating cubic spline (zero second derivative at ends).
    CubicSpline,
}

/// How the first row of a curve file is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// First row is the grid when its values are strictly increasing.
    #[default]
    Auto,
    /// First row is always the grid.
    Grid,
    /// Every row is a curve; grid defaults to equispaced points on [0, 1].
    None,
}

/// A set of curves evaluated on a shared grid.
#[derive(Debug, Clone)]
pub struct FunctionalSample<T> {
    grid: Grid<T>,
    values: Mat<T>,
    mean_removed: bool,
    mean_curve: Vec<T>,
}

impl<T: Real> FunctionalSample<T> {
    /// Wraps an `n × G` value matrix over a grid; all values must be finite.
    pub fn new(grid: Grid<T>, values: Mat<T>) -> Result<Self> {
        if values.cols() != grid.len() {
            return Err(Error::Dimension(format!(
                "curves have {} columns but the grid has {} points",
                values.cols(),
                grid.len()
            )));
        }
        if let Some(pos) = values.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite curve value at row {}, column {}",
                pos / values.cols() + 1,
                pos % values.cols() + 1
            )));
        }
        let g = grid.len();
        Ok(FunctionalSample {
            grid,
            values,
            mean_removed: false,
            mean_curve: vec![T::zero(); g],
        })
    }

    pub fn from_rows(grid: Grid<T>, rows: &[Vec<T>]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != grid.len() {
                return Err(Error::Dimension(format!(
                    "curve row {} has {} values but the grid has {} points",
                    i + 1,
                    row.len(),
                    grid.len()
                )));
            }
        }
        FunctionalSample::new(grid, Mat::from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &Mat<T> {
        &self.values
    }

    pub fn curve(&self, i: usize) -> &[T] {
        self.values.row(i)
    }

    pub fn mean_removed(&self) -> bool {
        self.mean_removed
    }

    pub fn mean_curve(&self) -> &[T] {
        &self.mean_curve
    }

    /// Marks the sample as centered without modifying it.
    ///
    /// For data whose mean is zero by construction (e.g. draws from a
    /// zero-mean process or values pre-centered upstream); the caller takes
    /// responsibility for that claim. `mean_curve` stays zero.
    pub fn assume_centered(mut self) -> Self {
        self.mean_removed = true;
        self
    }

    /// Subtracts the pointwise sample mean, recording it as `mean_curve`.
    pub fn center(&self) -> Self {
        let n = self.n();
        let g = self.grid_len();
        let inv_n = T::one() / T::of_usize(n.max(1));
        let mut mean = vec![T::zero(); g];
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(self.curve(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m *= inv_n;
        }
        let mut values = self.values.clone();
        for i in 0..n {
            for (v, &m) in values.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        FunctionalSample {
            grid: self.grid.clone(),
            values,
            mean_removed: true,
            mean_curve: mean,
        }
    }

    /// Re-evaluates every curve on `target`, which must lie inside the
    /// source range.
    pub fn interpolate(&self, target: &Grid<T>, method: InterpMethod) -> Result<Self> {
        let (lo, hi) = (self.grid.min(), self.grid.max());
        let tol = (hi - lo) * T::of(1e-12);
        for &t in target.points() {
            if t < lo - tol || t > hi + tol {
                return Err(Error::Extrapolation(format!(
                    "target point {t} lies outside the source range [{lo}, {hi}]"
                )));
            }
        }
        if target.points() == self.grid.points() {
            return Ok(FunctionalSample {
                grid: target.clone(),
                values: self.values.clone(),
                mean_removed: self.mean_removed,
                mean_curve: self.mean_curve.clone(),
            });
        }
        let mut rows = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let row = match method {
                InterpMethod::Linear => {
                    interp_linear(self.grid.points(), self.curve(i), target.points())
                }
                InterpMethod::CubicSpline => {
                    interp_natural_cubic(self.grid.points(), self.curve(i), target.points())
                }
            };
            rows.push(row);
        }
        let mean_curve = if self.mean_removed {
            match method {
                InterpMethod::Linear => {
                    interp_linear(self.grid.points(), &self.mean_curve, target.points())
                }
                InterpMethod::CubicSpline => {
                    interp_natural_cubic(self.grid.points(), &self.mean_curve, target.points())
                }
            }
        } else {
            vec![T::zero(); target.len()]
        };
        Ok(FunctionalSample {
            grid: target.clone(),
            values: Mat::from_rows(&rows),
            mean_removed: self.mean_removed,
            mean_curve,
        })
    }
}

/// Reads a delimited curve file (comma or tab), one subject per row.
///
/// Under [`HeaderMode::Auto`] the first row is taken as the grid exactly when
/// its values are strictly increasing; real curve rows rarely are, and the
/// mode can be forced either way when they might be.
pub fn load_curves<T: Real>(path: impl AsRef<Path>, header: HeaderMode) -> Result<FunctionalSample<T>> {
    let path = path.as_ref();
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    parse_curves(&text, header)
}

/// Parses curve text: the testable core of [`load_curves`].
pub fn parse_curves<T: Real>(text: &str, header: HeaderMode) -> Result<FunctionalSample<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let delim = if trimmed.contains('\t') { '\t' } else { ',' };
        let mut row = Vec::new();
        for (col, cell) in trimmed.split(delim).enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|e| Error::Parse {
                row: line_no + 1,
                col: col + 1,
                detail: format!("{e}: {cell:?}"),
            })?;
            row.push(T::of(v));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("curve file contains no data rows".into()));
    }
    let cols = rows[0].len();
    if cols < 2 {
        return Err(Error::Dimension(format!(
            "curve rows need at least 2 columns, got {cols}"
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Format(format!(
                "ragged rows: row {} has {} columns, expected {}",
                i + 1,
                row.len(),
                cols
            )));
        }
    }

    let first_increasing = rows[0].windows(2).all(|w| w[0] < w[1]);
    let take_header = match header {
        HeaderMode::Grid => true,
        HeaderMode::None => false,
        HeaderMode::Auto => first_increasing,
    };
    let (grid, data) = if take_header {
        if !first_increasing {
            return Err(Error::Format(
                "header row declared as grid is not strictly increasing".into(),
            ));
        }
        if rows.len() < 2 {
            return Err(Error::Format(
                "curve file holds only a grid header and no curves".into(),
            ));
        }
        (Grid::new(rows[0].clone())?, &rows[1..])
    } else {
        (Grid::uniform(cols, T::zero(), T::one())?, &rows[..])
    };
    FunctionalSample::from_rows(grid, data)
}

/// Piecewise-linear interpolation of `(xs, ys)` at each target point.
///
/// Targets that hit a source point exactly return the stored value
/// bit-for-bit; targets beyond the ends (by round-off only, callers range
/// check) clamp to the end values.
pub fn interp_linear<T: Real>(xs: &[T], ys: &[T], targets: &[T]) -> Vec<T> {
    debug_assert_eq!(xs.len(), ys.len());
    targets
        .iter()
        .map(|&t| {
            let k = locate(xs, t);
            match k {
                Location::Exact(i) => ys[i],
                Location::Below => ys[0],
                Location::Above => ys[xs.len() - 1],
                Location::Segment(i) => {
                    let w = (t - xs[i]) / (xs[i + 1] - xs[i]);
                    ys[i] + w * (ys[i + 1] - ys[i])
                }
            }
        })
        .collect()
}

/// Natural cubic-spline interpolation of `(xs, ys)` at each target point.
pub fn interp_natural_cubic<T: Real>(xs: &[T], ys: &[T], targets: &[T]) -> Vec<T> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 2 {
        return interp_linear(xs, ys, targets);
    }
    // Second derivatives M_i from the natural-boundary tridiagonal system,
    // solved by the Thomas algorithm.
    let m = {
        let mut diag = vec![T::zero(); n - 2];
        let mut upper = vec![T::zero(); n - 2];
        let mut lower = vec![T::zero(); n - 2];
        let mut rhs = vec![T::zero(); n - 2];
        let six = T::of(6.0);
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            diag[i - 1] = T::of(2.0) * (h0 + h1);
            lower[i - 1] = h0;
            upper[i - 1] = h1;
            rhs[i - 1] = six * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        for i in 1..n - 2 {
            let w = lower[i] / diag[i - 1];
            diag[i] = diag[i] - w * upper[i - 1];
            rhs[i] = rhs[i] - w * rhs[i - 1];
        }
        let mut sol = vec![T::zero(); n - 2];
        sol[n - 3] = rhs[n - 3] / diag[n - 3];
        for i in (0..n - 3).rev() {
            sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
        }
        let mut m = vec![T::zero(); n];
        m[1..n - 1].copy_from_slice(&sol);
        m
    };
    let six = T::of(6.0);
    targets
        .iter()
        .map(|&t| {
            let i = match locate(xs, t) {
                Location::Exact(i) => return ys[i],
                Location::Below => 0,
                Location::Above => n - 2,
                Location::Segment(i) => i,
            };
            let h = xs[i + 1] - xs[i];
            let a = xs[i + 1] - t;
            let b = t - xs[i];
            (m[i] * a * a * a + m[i + 1] * b * b * b) / (six * h)
                + (ys[i] / h - m[i] * h / six) * a
                + (ys[i + 1] / h - m[i + 1] * h / six) * b
        })
        .collect()
}

enum Location {
    Exact(usize),
    Segment(usize),
    Below,
    Above,
}

/// Binary-search location of `t` in the sorted knots `xs`.
fn locate<T: Real>(xs: &[T], t: T) -> Location {
    let n = xs.len();
    if t < xs[0] {
        return Location::Below;
    }
    if t > xs[n - 1] {
        return Location::Above;
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if t == xs[lo] {
        Location::Exact(lo)
    } else if t == xs[hi] {
        Location::Exact(hi)
    } else {
        Location::Segment(lo)
    }
}
