//! Dense row-major matrices and the small set of factorizations the solvers need.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use num_traits::{Float, NumAssign};

use crate::error::{mismatch, Error, Result};

/// Floating-point element type. Implemented for `f32` and `f64`.
pub trait Real:
    Float + NumAssign + Sum + Default + Debug + Display + LowerExp + FromStr + Send + Sync + 'static
{
    /// Size of one element in bytes.
    const BYTES: usize;
    /// Significant decimal digits needed for a round-trip exact text form.
    const ROUND_TRIP_DIGITS: usize;

    fn of(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    const BYTES: usize = 8;
    const ROUND_TRIP_DIGITS: usize = 17;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const BYTES: usize = 4;
    const ROUND_TRIP_DIGITS: usize = 9;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Dense matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Mat<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Debug> Debug for Mat<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(mismatch(
                "Mat::from_vec",
                format!("{} elements for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(mismatch(
                    "Mat::from_rows",
                    format!("row {i} has {} entries, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::of(x.to_f64())).collect(),
        }
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(mismatch(
                "matmul",
                format!("{:?} * {:?}", self.shape(), rhs.shape()),
            ));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (p, &a) in self.row(r).iter().enumerate() {
                for (o, &b) in out_row.iter_mut().zip(rhs.row(p)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * rhs^T`; both operands are read along rows.
    pub fn matmul_t(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(mismatch(
                "matmul_t",
                format!("{:?} * {:?}^T", self.shape(), rhs.shape()),
            ));
        }
        Ok(Self::from_fn(self.rows, rhs.rows, |r, c| {
            dot(self.row(r), rhs.row(c))
        }))
    }

    fn zip_with(&self, rhs: &Self, op: &'static str, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(mismatch(
                op,
                format!("{:?} vs {:?}", self.shape(), rhs.shape()),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    /// Element-wise product.
    pub fn hadamard(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &x| if x.abs() > m { x.abs() } else { m })
    }

    /// Largest absolute entry-wise difference; `NaN` entries propagate as infinity.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<T> {
        if self.shape() != rhs.shape() {
            return Err(mismatch(
                "max_abs_diff",
                format!("{:?} vs {:?}", self.shape(), rhs.shape()),
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), |m, d| if d.is_nan() { T::infinity() } else { m.max(d) }))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Pivot magnitude below which an `n x n` system with largest entry `scale`
/// is treated as singular.
#[inline]
pub fn singular_threshold<T: Real>(n: usize, scale: T) -> T {
    T::of(n as f64) * T::epsilon() * scale
}

/// Solves `a x = rhs` in place by LU with partial pivoting (right-looking).
///
/// `a` is an `n x n` row-major buffer and is overwritten by its factors; `rhs`
/// is overwritten by the solution. Returns the column of the first
/// numerically zero pivot on failure.
pub fn lu_solve_in_place<T: Real>(a: &mut [T], n: usize, rhs: &mut [T]) -> std::result::Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let tol = singular_threshold(n, scale);

    for p in 0..n {
        let mut piv = p;
        let mut best = a[p * n + p].abs();
        for r in p + 1..n {
            let v = a[r * n + p].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > tol) {
            return Err(p);
        }
        if piv != p {
            let (top, bottom) = a.split_at_mut(piv * n);
            top[p * n..(p + 1) * n].swap_with_slice(&mut bottom[..n]);
            rhs.swap(p, piv);
        }
        let (head, tail) = a.split_at_mut((p + 1) * n);
        let pivot_row = &head[p * n..];
        let inv = T::one() / pivot_row[p];
        for r in 0..n - p - 1 {
            let row = &mut tail[r * n..(r + 1) * n];
            let l = row[p] * inv;
            if l == T::zero() {
                continue;
            }
            row[p] = l;
            for (x, &u) in row[p + 1..].iter_mut().zip(&pivot_row[p + 1..]) {
                *x -= l * u;
            }
            let rp = rhs[p];
            rhs[p + 1 + r] -= l * rp;
        }
    }

    for i in (0..n).rev() {
        let row = &a[i * n..(i + 1) * n];
        let s = dot(&row[i + 1..], &rhs[i + 1..]);
        rhs[i] = (rhs[i] - s) / row[i];
    }
    Ok(())
}

/// Solves the square system `a x = b` for every column of `b`.
pub fn solve<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(mismatch(
            "solve",
            format!("lhs {:?}, rhs {:?}", a.shape(), b.shape()),
        ));
    }
    let n = a.rows();
    let mut out = Mat::zeros(n, b.cols());
    let mut col = vec![T::zero(); n];
    for c in 0..b.cols() {
        let mut lu = a.as_slice().to_vec();
        for r in 0..n {
            col[r] = b[(r, c)];
        }
        lu_solve_in_place(&mut lu, n, &mut col)
            .map_err(|row| Error::SingularSystem { batch: 0, row })?;
        for r in 0..n {
            out[(r, c)] = col[r];
        }
    }
    Ok(out)
}

/// Cholesky factor `L` of a symmetric positive definite matrix, or `None`
/// when a non-positive pivot is met.
pub fn cholesky<T: Real>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(d > T::zero()) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` column by column given the Cholesky factor `L`.
pub fn cholesky_solve<T: Real>(l: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for p in 0..i {
                s -= l[(i, p)] * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for p in i + 1..n {
                s -= l[(p, i)] * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Householder QR with column pivoting of an `m x n` matrix (`m >= n`).
pub struct PivotedQr<T> {
    /// Householder vectors below the diagonal, `R` on and above it.
    qr: Mat<T>,
    tau: Vec<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(a: &Mat<T>) -> Self {
        let (m, n) = a.shape();
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![T::zero(); n.min(m)];
        let mut norms: Vec<T> = (0..n)
            .map(|c| (0..m).map(|r| qr[(r, c)] * qr[(r, c)]).sum::<T>())
            .collect();

        for j in 0..n.min(m) {
            let (best, _) = norms[j..]
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                });
            let best = best + j;
            if best != j {
                for r in 0..m {
                    let t = qr[(r, j)];
                    qr[(r, j)] = qr[(r, best)];
                    qr[(r, best)] = t;
                }
                norms.swap(j, best);
                perm.swap(j, best);
            }

            let alpha_norm = (j..m).map(|r| qr[(r, j)] * qr[(r, j)]).sum::<T>().sqrt();
            if alpha_norm == T::zero() {
                tau[j] = T::zero();
                continue;
            }
            let x0 = qr[(j, j)];
            let beta = if x0 >= T::zero() { -alpha_norm } else { alpha_norm };
            let v0 = x0 - beta;
            for r in j + 1..m {
                qr[(r, j)] /= v0;
            }
            tau[j] = (beta - x0) / beta;
            qr[(j, j)] = beta;

            for c in j + 1..n {
                let mut s = qr[(j, c)];
                for r in j + 1..m {
                    s += qr[(r, j)] * qr[(r, c)];
                }
                s *= tau[j];
                qr[(j, c)] -= s;
                for r in j + 1..m {
                    let v = qr[(r, j)];
                    qr[(r, c)] -= s * v;
                }
                // downdate; recompute exactly to avoid cancellation
                norms[c] = (j + 1..m).map(|r| qr[(r, c)] * qr[(r, c)]).sum::<T>();
            }
        }

        let diag_max = if n > 0 && m > 0 { qr[(0, 0)].abs() } else { T::zero() };
        let tol = T::of(m.max(n) as f64) * T::epsilon() * diag_max;
        let rank = (0..n.min(m))
            .take_while(|&j| qr[(j, j)].abs() > tol)
            .count();
        Self { qr, tau, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Least-squares solution of `a x = b`; requires full column rank.
    pub fn solve_least_squares(&self, b: &Mat<T>) -> Mat<T> {
        let (m, n) = self.qr.shape();
        let mut y = b.clone();
        for c in 0..b.cols() {
            for j in 0..n.min(m) {
                let mut s = y[(j, c)];
                for r in j + 1..m {
                    s += self.qr[(r, j)] * y[(r, c)];
                }
                s *= self.tau[j];
                y[(j, c)] -= s;
                for r in j + 1..m {
                    y[(r, c)] -= s * self.qr[(r, j)];
                }
            }
        }
        let mut x = Mat::zeros(n, b.cols());
        for c in 0..b.cols() {
            let mut z = vec![T::zero(); n];
            for i in (0..n).rev() {
                let mut s = y[(i, c)];
                for p in i + 1..n {
                    s -= self.qr[(i, p)] * z[p];
                }
                z[i] = s / self.qr[(i, i)];
            }
            for (j, &pj) in self.perm.iter().enumerate() {
                x[(pj, c)] = z[j];
            }
        }
        x
    }
}
