//! The regularized map solve in three formulations.
//!
//! Setting the gradient of the energy to zero gives
//! `C (A A^T) + lambda (M .* C) = B A^T`. Because the mask acts entry-wise,
//! row `i` of `C` only couples to itself:
//! `(A A^T + lambda diag(m_i)) c_i = (B A^T)_i`.
//!
//! * [`solve_rowwise`] factors those `k` systems one after another.
//! * [`solve_batched`] packs every system of one or more maps into a single
//!   contiguous buffer and factors them in one call.
//! * [`solve_full_oracle`] ignores the row structure and solves the dense
//!   `k^2 x k^2` system for `vec(C)`. It is only meant for cross-checks.

use std::time::{Duration, Instant};

use crate::batched::LaneBatch;
use crate::error::{mismatch, Error, Result};
use crate::linalg::{lu_solve_in_place, Mat, Real};
use crate::mask::PenaltyMask;
use crate::spectral::{check_lambda, normal_residual, FunctionalMap, SpectralDescriptors};

pub const DEFAULT_LAMBDA: f64 = 100.0;

/// Largest `k` accepted by [`solve_full_oracle`].
pub const ORACLE_MAX_K: usize = 64;

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Added to every diagonal entry of every row system. Zero disables it.
    pub ridge: f64,
    /// Upper bound on the batched left-hand-side buffer, checked before
    /// allocation.
    pub mem_cap_bytes: Option<u64>,
    /// Flips the sign of one right-hand-side entry in the batched path.
    #[doc(hidden)]
    pub inject_fault: bool,
}

/// One map to solve for.
#[derive(Clone, Debug)]
pub struct Problem<T = f64> {
    a: SpectralDescriptors<T>,
    b: SpectralDescriptors<T>,
    mask: PenaltyMask<T>,
    lambda: f64,
}

impl<T: Real> Problem<T> {
    pub fn new(
        a: SpectralDescriptors<T>,
        b: SpectralDescriptors<T>,
        mask: PenaltyMask<T>,
        lambda: f64,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        let k = a.k();
        if b.values().shape() != a.values().shape() || mask.k() != k {
            return Err(mismatch(
                "Problem::new",
                format!(
                    "A {:?}, B {:?}, M {:?}",
                    a.values().shape(),
                    b.values().shape(),
                    mask.values().shape()
                ),
            ));
        }
        Ok(Self { a, b, mask, lambda })
    }

    pub fn k(&self) -> usize {
        self.a.k()
    }

    pub fn a(&self) -> &SpectralDescriptors<T> {
        &self.a
    }

    pub fn b(&self) -> &SpectralDescriptors<T> {
        &self.b
    }

    pub fn mask(&self) -> &PenaltyMask<T> {
        &self.mask
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cast<U: Real>(&self) -> Problem<U> {
        Problem {
            a: self.a.cast(),
            b: self.b.cast(),
            mask: self.mask.cast(),
            lambda: self.lambda,
        }
    }

    /// `(A A^T, B A^T)`.
    fn normal_parts(&self) -> Result<(Mat<T>, Mat<T>)> {
        let a = self.a.values();
        Ok((a.matmul_t(a)?, self.b.values().matmul_t(a)?))
    }

    fn residual(&self, c: &Mat<T>) -> Result<f64> {
        let r = normal_residual(
            c,
            self.a.values(),
            self.b.values(),
            self.mask.values(),
            T::of(self.lambda),
        )?;
        Ok(r.frobenius_norm().to_f64())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport<T = f64> {
    pub map: FunctionalMap<T>,
    /// `||C A A^T + lambda (M .* C) - B A^T||_F`.
    pub residual_norm: f64,
    pub wall_time: Duration,
    pub peak_extra_bytes: u64,
}

/// Result of solving several maps in one batched call.
#[derive(Clone, Debug)]
pub struct StackReport<T = f64> {
    pub maps: Vec<FunctionalMap<T>>,
    pub residual_norms: Vec<f64>,
    pub wall_time: Duration,
    pub peak_extra_bytes: u64,
}

/// Size of the diagonal-embedded `[b, k, k, k]` left-hand side.
pub fn batched_extra_bytes<T: Real>(b: usize, k: usize) -> u64 {
    (b as u64) * (k as u64).pow(3) * T::BYTES as u64
}

/// Size of the `[b, k, k]` working set of the row-wise loop.
pub fn rowwise_working_bytes<T: Real>(b: usize, k: usize) -> u64 {
    (b as u64) * (k as u64).pow(2) * T::BYTES as u64
}

/// Solves the `k` row systems one by one, reusing a single `k x k` buffer.
pub fn solve_rowwise<T: Real>(p: &Problem<T>, opts: &SolveOptions) -> Result<SolveReport<T>> {
    let k = p.k();
    let lambda = T::of(p.lambda);
    let ridge = T::of(opts.ridge);
    let m = p.mask.values();

    let start = Instant::now();
    let (aat, bat) = p.normal_parts()?;
    let mut c = Mat::zeros(k, k);
    let mut lhs = vec![T::zero(); k * k];
    for i in 0..k {
        lhs.copy_from_slice(aat.as_slice());
        for j in 0..k {
            lhs[j * k + j] += lambda * m[(i, j)] + ridge;
        }
        let row = c.row_mut(i);
        row.copy_from_slice(bat.row(i));
        lu_solve_in_place(&mut lhs, k, row)
            .map_err(|_| Error::SingularSystem { batch: 0, row: i })?;
    }
    let wall_time = start.elapsed();

    Ok(SolveReport {
        residual_norm: p.residual(&c)?,
        map: FunctionalMap::new(c)?,
        wall_time,
        peak_extra_bytes: rowwise_working_bytes::<T>(1, k),
    })
}

/// Solves all row systems of one map in a single batched call.
pub fn solve_batched<T: Real>(p: &Problem<T>, opts: &SolveOptions) -> Result<SolveReport<T>> {
    let mut out = solve_batched_stack(std::slice::from_ref(p), opts)?;
    Ok(SolveReport {
        map: out.maps.pop().expect("one map per problem"),
        residual_norm: out.residual_norms[0],
        wall_time: out.wall_time,
        peak_extra_bytes: out.peak_extra_bytes,
    })
}

/// Solves the `b * k` row systems of `b` maps of equal size in one call.
pub fn solve_batched_stack<T: Real>(
    problems: &[Problem<T>],
    opts: &SolveOptions,
) -> Result<StackReport<T>> {
    let Some(first) = problems.first() else {
        return Err(Error::InvalidParameter("empty problem stack".into()));
    };
    let k = first.k();
    if let Some(p) = problems.iter().find(|p| p.k() != k) {
        return Err(mismatch(
            "solve_batched_stack",
            format!("mixed sizes {k} and {}", p.k()),
        ));
    }
    let b = problems.len();
    let required = batched_extra_bytes::<T>(b, k);
    if let Some(cap) = opts.mem_cap_bytes {
        if required > cap {
            return Err(Error::MemoryCap { required, cap });
        }
    }
    let ridge = T::of(opts.ridge);

    let start = Instant::now();
    let parts = problems
        .iter()
        .map(Problem::normal_parts)
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<T> = problems.iter().map(|p| T::of(p.lambda)).collect();
    let mut batch = LaneBatch::assemble(
        k,
        b * k,
        |s| parts[s / k].0.as_slice(),
        |s, j| lambdas[s / k] * problems[s / k].mask.values()[(s % k, j)] + ridge,
        |s, j| {
            let v = parts[s / k].1[(s % k, j)];
            if opts.inject_fault && s == 0 && j == 0 {
                -v
            } else {
                v
            }
        },
    );
    batch.solve().map_err(|s| Error::SingularSystem {
        batch: s / k,
        row: s % k,
    })?;
    let maps: Vec<Mat<T>> = (0..b)
        .map(|q| Mat::from_fn(k, k, |i, j| batch.solution(q * k + i, j)))
        .collect();
    let wall_time = start.elapsed();
    drop(batch);

    let residual_norms = problems
        .iter()
        .zip(&maps)
        .map(|(p, c)| p.residual(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(StackReport {
        maps: maps.into_iter().map(FunctionalMap::new).collect::<Result<_>>()?,
        residual_norms,
        wall_time,
        peak_extra_bytes: required,
    })
}

/// Solves the vectorized system `(I (x) (A A^T)^T + lambda diag(vec M)) vec C = vec(B A^T)`
/// with `vec` taken row-major, as one dense `k^2 x k^2` factorization.
pub fn solve_full_oracle<T: Real>(p: &Problem<T>) -> Result<FunctionalMap<T>> {
    let k = p.k();
    if k > ORACLE_MAX_K {
        return Err(Error::TooLarge {
            k,
            max: ORACLE_MAX_K,
        });
    }
    let n = k * k;
    let (aat, bat) = p.normal_parts()?;
    let lambda = T::of(p.lambda);
    let m = p.mask.values();

    let mut big = vec![T::zero(); n * n];
    for i in 0..k {
        for j in 0..k {
            let r = i * k + j;
            for l in 0..k {
                big[r * n + i * k + l] = aat[(l, j)];
            }
            big[r * n + r] += lambda * m[(i, j)];
        }
    }
    let mut x = bat.into_vec();
    lu_solve_in_place(&mut big, n, &mut x).map_err(|col| Error::SingularSystem {
        batch: 0,
        row: col / k,
    })?;
    FunctionalMap::new(Mat::from_vec(k, k, x)?)
}

/// `||C A A^T + lambda (M .* C) - B A^T||_F`.
pub fn check_stationarity<T: Real>(
    c: &FunctionalMap<T>,
    a: &SpectralDescriptors<T>,
    b: &SpectralDescriptors<T>,
    m: &PenaltyMask<T>,
    lambda: f64,
) -> Result<T> {
    let k = c.k();
    if a.k() != k || b.values().shape() != a.values().shape() || m.k() != k {
        return Err(mismatch(
            "check_stationarity",
            format!(
                "C {:?}, A {:?}, B {:?}, M {:?}",
                c.values().shape(),
                a.values().shape(),
                b.values().shape(),
                m.values().shape()
            ),
        ));
    }
    check_lambda(lambda)?;
    let r = normal_residual(c.values(), a.values(), b.values(), m.values(), T::of(lambda))?;
    Ok(r.frobenius_norm())
}

/// Stationarity tolerance `1e-8 (1 + ||B A^T||_F)`.
pub fn stationarity_tolerance<T: Real>(p: &Problem<T>) -> Result<f64> {
    let bat = p.b.values().matmul_t(p.a.values())?;
    Ok(1e-8 * (1.0 + bat.frobenius_norm().to_f64()))
}
