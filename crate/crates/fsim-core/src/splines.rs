//! Clamped B-spline basis over an observed index range.
//!
//! The basis covers `[U_lo, U_hi]` with equispaced interior knots and
//! boundary knots repeated `degree + 1` times, giving dimension
//! `K = subintervals + degree`. Values come from the Cox–de Boor triangular
//! recursion; derivatives come from the standard degree-lowering recurrence.
//! Evaluation outside the range clamps to the nearest endpoint so objective
//! functions stay finite and continuous while an index direction is being
//! optimized.

use crate::error::{Error, Result};
use crate::real::Real;

/// How many knots to place over the index range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnotSpec<T> {
    /// Target spacing `h0`; the subinterval count becomes `ceil(range / h0)`.
    Spacing(T),
    /// Exact number of subintervals between the range endpoints.
    Subintervals(usize),
}

/// Clamped B-spline basis of a fixed degree over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis<T> {
    degree: usize,
    /// Full knot vector of length `dim + degree + 1`.
    knots: Vec<T>,
    /// Basis dimension `K`.
    dim: usize,
    /// Subintervals between the endpoints.
    subintervals: usize,
}

impl<T: Real> SplineBasis<T> {
    /// Builds the basis spanning the observed index values.
    ///
    /// The range endpoints are the min and max of `index_values`; interior
    /// knots are equispaced.
    pub fn build_index_knots(index_values: &[T], degree: usize, spec: KnotSpec<T>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Config("spline degree must be at least 1".into()));
        }
        if index_values.len() < degree + 2 {
            return Err(Error::Precondition(format!(
                "need at least degree + 2 = {} index values, got {}",
                degree + 2,
                index_values.len()
            )));
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &v in index_values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo < hi) {
            return Err(Error::DegenerateIndex(format!(
                "index values span zero width at {lo}; no spline basis exists"
            )));
        }
        let k = match spec {
            KnotSpec::Spacing(h0) => {
                if !(h0 > T::zero()) {
                    return Err(Error::Config(format!(
                        "knot spacing must be positive, got {h0}"
                    )));
                }
                ((hi - lo) / h0).ceil().as_f64() as usize
            }
            KnotSpec::Subintervals(k) => k,
        };
        if k < 1 {
            return Err(Error::Config(
                "knot scheme must produce at least one subinterval".into(),
            ));
        }
        Ok(Self::equispaced(lo, hi, degree, k))
    }

    /// Equispaced clamped basis with `k` subintervals on `[lo, hi]`.
    pub fn equispaced(lo: T, hi: T, degree: usize, k: usize) -> Self {
        let mut knots = Vec::with_capacity(k + 2 * degree + 1);
        for _ in 0..=degree {
            knots.push(lo);
        }
        let step = (hi - lo) / T::of_usize(k);
        for j in 1..k {
            knots.push(lo + step * T::of_usize(j));
        }
        for _ in 0..=degree {
            knots.push(hi);
        }
        SplineBasis {
            degree,
            dim: k + degree,
            subintervals: k,
            knots,
        }
    }

    /// Reconstructs a basis from a stored knot vector (artifact round trip).
    pub fn from_knots(degree: usize, knots: Vec<T>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Config("spline degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Config(format!(
                "knot vector of length {} is too short for degree {degree}",
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("knot vector must be non-decreasing".into()));
        }
        let m = knots.len();
        let lo = knots[0];
        let hi = knots[m - 1];
        if !(lo < hi) {
            return Err(Error::Config("knot vector spans zero width".into()));
        }
        if knots[degree] != lo || knots[m - 1 - degree] != hi {
            return Err(Error::Config(format!(
                "knot vector must repeat each endpoint {} times",
                degree + 1
            )));
        }
        if knots[degree + 1] <= lo || knots[m - 2 - degree] >= hi {
            return Err(Error::Config(
                "interior knots must lie strictly inside the range".into(),
            ));
        }
        let interior = &knots[degree + 1..m - 1 - degree];
        if interior.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "interior knots must be strictly increasing".into(),
            ));
        }
        Ok(SplineBasis {
            degree,
            dim: m - degree - 1,
            subintervals: interior.len() + 1,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Basis dimension `K`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn lo(&self) -> T {
        self.knots[0]
    }

    pub fn hi(&self) -> T {
        *self.knots.last().expect("nonempty knots")
    }

    /// Largest spacing between consecutive distinct knots.
    pub fn max_spacing(&self) -> T {
        self.knots
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }

    fn clamp(&self, u: T) -> T {
        u.max(self.lo()).min(self.hi())
    }

    /// Knot span index `i` with `U_i ≤ u < U_{i+1}` (rightmost at `hi`).
    fn find_span(&self, u: T) -> usize {
        let p = self.degree;
        let last = self.dim - 1;
        if u >= self.knots[last + 1] {
            return last;
        }
        if u <= self.knots[p] {
            return p;
        }
        let mut lo = p;
        let mut hi = last + 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Nonzero basis values of degree `q ≤ self.degree` at `u` in `span`:
    /// the values of `N_{span−q}, …, N_{span}` by the triangular recursion.
    fn values_of_degree(&self, q: usize, span: usize, u: T) -> Vec<T> {
        let mut vals = vec![T::zero(); q + 1];
        vals[0] = T::one();
        let mut left = vec![T::zero(); q + 1];
        let mut right = vec![T::zero(); q + 1];
        for j in 1..=q {
            left[j] = u - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - u;
            let mut saved = T::zero();
            for r in 0..j {
                let temp = vals[r] / (right[r + 1] + left[j - r]);
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        vals
    }

    /// All `K` basis values at `u` (clamped into range).
    pub fn eval(&self, u: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(u, &mut out);
        out
    }

    /// Writes all `K` basis values at `u` into `out`.
    pub fn eval_into(&self, u: T, out: &mut [T]) {
        assert_eq!(out.len(), self.dim, "output length must equal basis dim");
        out.fill(T::zero());
        let u = self.clamp(u);
        let span = self.find_span(u);
        let vals = self.values_of_degree(self.degree, span, u);
        for (j, &v) in vals.iter().enumerate() {
            out[span - self.degree + j] = v;
        }
    }

    /// All `K` derivatives of the given order at `u` (clamped into range;
    /// endpoints take the one-sided derivative from inside).
    pub fn eval_deriv(&self, u: T, order: usize) -> Result<Vec<T>> {
        if order == 0 {
            return Err(Error::Config("derivative order must be at least 1".into()));
        }
        if order > self.degree {
            return Err(Error::Config(format!(
                "derivative order {order} exceeds spline degree {}",
                self.degree
            )));
        }
        let u = self.clamp(u);
        let span = self.find_span(u);
        let p = self.degree;

        // Values of the degree-(p − order) basis over the same knots.
        let q0 = p - order;
        let dim_q = self.knots.len() - q0 - 1;
        let mut cur = vec![T::zero(); dim_q];
        let vals = self.values_of_degree(q0, span, u);
        for (j, &v) in vals.iter().enumerate() {
            cur[span - q0 + j] = v;
        }

        // Raise the degree back up: each step turns order-(t−1) derivatives
        // of the degree-(q−1) basis into order-t derivatives of degree q via
        //   N′_{j,q} = q [ N_{j,q−1} / (U_{j+q} − U_j)
        //               − N_{j+1,q−1} / (U_{j+q+1} − U_{j+1}) ].
        for t in 1..=order {
            let q = q0 + t;
            let dim_new = self.knots.len() - q - 1;
            let qf = T::of_usize(q);
            let mut next = vec![T::zero(); dim_new];
            for (j, slot) in next.iter_mut().enumerate() {
                let d1 = self.knots[j + q] - self.knots[j];
                let d2 = self.knots[j + q + 1] - self.knots[j + 1];
                let mut v = T::zero();
                if d1 > T::zero() {
                    v += cur[j] / d1;
                }
                if d2 > T::zero() {
                    v -= cur[j + 1] / d2;
                }
                *slot = qf * v;
            }
            cur = next;
        }
        Ok(cur)
    }
}
