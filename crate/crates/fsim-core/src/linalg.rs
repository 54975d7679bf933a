//! Small dense linear algebra over a generic scalar.
//!
//! The problem sizes here are modest (grids of ~100 points, spline bases of
//! ~10-25 functions, a handful of parametric coordinates), so a plain
//! row-major matrix with a cyclic Jacobi eigensolver and a Cholesky solve
//! covers everything the estimators need.

use crate::error::{Error, Result};
use crate::real::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds from rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `self^T * x` for a column vector `x` of length `rows`.
    pub fn tr_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len(), "tr_matvec dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// Gram matrix `self^T * self`.
    pub fn gram(&self) -> Mat<T> {
        let k = self.cols;
        let mut out = Mat::zeros(k, k);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..k {
                let ra = r[a];
                if ra == T::zero() {
                    continue;
                }
                for b in a..k {
                    out[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                out[(a, b)] = out[(b, a)];
            }
        }
        out
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Maximum absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn axpy<T: Real>(y: &mut [T], alpha: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Cholesky factor of a symmetric positive definite matrix.
///
/// Fails with a rank error when a pivot drops below `tol` times the largest
/// diagonal entry, reporting a cheap condition estimate.
pub struct Cholesky<T> {
    factor: Mat<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Mat<T>) -> Result<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "cholesky needs a square matrix");
        let mut l = Mat::zeros(n, n);
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
        let tol = T::of(1e-14) * max_diag.max(T::min_positive_value());
        let mut min_piv = T::infinity();
        let mut max_piv = T::zero();
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= tol {
                return Err(Error::Rank(format!(
                    "matrix not positive definite at pivot {j} (pivot {d}, scale {max_diag})"
                )));
            }
            let dj = d.sqrt();
            min_piv = min_piv.min(dj);
            max_piv = max_piv.max(dj);
            l[(j, j)] = dj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / dj;
            }
        }
        let _ = (min_piv, max_piv);
        Ok(Cholesky { factor: l })
    }

    /// Squared condition estimate from the pivot range.
    pub fn condition_estimate(&self) -> T {
        let n = self.factor.rows();
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for i in 0..n {
            lo = lo.min(self.factor[(i, i)]);
            hi = hi.max(self.factor[(i, i)]);
        }
        let r = hi / lo;
        r * r
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.factor.rows();
        assert_eq!(b.len(), n);
        let l = &self.factor;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = l[(i, k)] * y[k];
                y[i] = y[i] - t;
            }
            y[i] = y[i] / l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = l[(k, i)] * y[k];
                y[i] = y[i] - t;
            }
            y[i] = y[i] / l[(i, i)];
        }
        y
    }
}

/// Solves the symmetric positive definite system `a x = b`.
pub fn solve_spd<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    Ok(Cholesky::new(a)?.solve(b))
}

/// Ordinary least squares via normal equations; errors on rank deficiency.
pub fn least_squares<T: Real>(design: &Mat<T>, y: &[T]) -> Result<Vec<T>> {
    let xtx = design.gram();
    let xty = design.tr_matvec(y);
    solve_spd(&xtx, &xty)
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns eigenvalues in descending order with matching eigenvector columns.
/// The accumulated rotations keep the eigenvector matrix orthogonal to
/// machine precision, which downstream orthonormality checks rely on.
pub fn sym_eigen<T: Real>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "sym_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    if n == 0 {
        return (Vec::new(), v);
    }

    let frob: T = m.data.iter().map(|&x| x * x).sum::<T>().sqrt();
    let stop = T::epsilon() * frob.max(T::min_positive_value());
    let max_sweeps = 64;

    for _sweep in 0..max_sweeps {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= stop * T::of(1e-3) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let tau = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let s = if tau >= T::zero() { T::one() } else { -T::one() };
                    s / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

    let values: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    (values, vectors)
}
