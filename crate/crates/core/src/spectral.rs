//! Spectral data types, descriptor projection and the map energy.

use crate::error::{mismatch, Error, Result};
use crate::linalg::{cholesky, cholesky_solve, Mat, PivotedQr, Real};
use crate::mask::PenaltyMask;

/// Condition estimate above which projection switches to pivoted QR.
pub const DEFAULT_COND_LIMIT: f64 = 1e10;

/// Laplacian eigenvalues of one shape, with an optional `V x k` eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T = f64> {
    eigenvalues: Vec<T>,
    basis: Option<Mat<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(eigenvalues: Vec<T>, basis: Option<Mat<T>>) -> Result<Self> {
        if eigenvalues.first().is_some_and(|&l| !(l >= T::zero())) {
            return Err(Error::InvalidParameter(
                "first eigenvalue must be non-negative".into(),
            ));
        }
        if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidParameter(
                "eigenvalues must be sorted ascending".into(),
            ));
        }
        if let Some(phi) = &basis {
            if phi.cols() != eigenvalues.len() {
                return Err(mismatch(
                    "Spectrum::new",
                    format!("{} eigenvalues, basis has {} columns", eigenvalues.len(), phi.cols()),
                ));
            }
        }
        Ok(Self { eigenvalues, basis })
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> Option<&Mat<T>> {
        self.basis.as_ref()
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn check_finite<T: Real>(m: &Mat<T>, what: &str) -> Result<()> {
    if m.all_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} has non-finite entries")))
    }
}

/// Per-vertex descriptors, `V x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFeatures<T = f64>(Mat<T>);

impl<T: Real> VertexFeatures<T> {
    pub fn new(values: Mat<T>) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::InvalidParameter("vertex features must be non-empty".into()));
        }
        check_finite(&values, "vertex features")?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &Mat<T> {
        &self.0
    }
}

/// Descriptors expressed in a spectral basis, `k x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDescriptors<T = f64>(Mat<T>);

impl<T: Real> SpectralDescriptors<T> {
    pub fn new(values: Mat<T>) -> Result<Self> {
        check_finite(&values, "spectral descriptors")?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &Mat<T> {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.rows()
    }

    pub fn d(&self) -> usize {
        self.0.cols()
    }

    pub fn cast<U: Real>(&self) -> SpectralDescriptors<U> {
        SpectralDescriptors(self.0.cast())
    }
}

/// A `k x k` functional map.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalMap<T = f64>(Mat<T>);

impl<T: Real> FunctionalMap<T> {
    pub fn new(values: Mat<T>) -> Result<Self> {
        if !values.is_square() {
            return Err(mismatch(
                "FunctionalMap::new",
                format!("map must be square, got {:?}", values.shape()),
            ));
        }
        check_finite(&values, "functional map")?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &Mat<T> {
        &self.0
    }

    pub fn into_inner(self) -> Mat<T> {
        self.0
    }

    pub fn k(&self) -> usize {
        self.0.rows()
    }
}

/// Least-squares coefficients `pinv(basis) * features`.
pub fn project_to_spectral<T: Real>(
    basis: &Mat<T>,
    features: &VertexFeatures<T>,
) -> Result<SpectralDescriptors<T>> {
    project_to_spectral_with(basis, features, DEFAULT_COND_LIMIT)
}

/// As [`project_to_spectral`], switching from the normal equations to
/// pivoted QR once the estimated condition number of `basis^T basis`
/// exceeds `cond_limit`.
pub fn project_to_spectral_with<T: Real>(
    basis: &Mat<T>,
    features: &VertexFeatures<T>,
    cond_limit: f64,
) -> Result<SpectralDescriptors<T>> {
    let f = features.values();
    let (v, k) = basis.shape();
    if f.rows() != v {
        return Err(mismatch(
            "project_to_spectral",
            format!("basis has {v} rows, features have {}", f.rows()),
        ));
    }
    if k > v {
        return Err(Error::RankDeficient { rank: v, expected: k });
    }

    let phi_t = basis.transpose();
    let gram = phi_t.matmul(basis)?;
    if let Some(l) = cholesky(&gram) {
        let (lo, hi) = (0..k).fold((T::infinity(), T::zero()), |(lo, hi), i| {
            let d = l[(i, i)];
            (lo.min(d), hi.max(d))
        });
        let cond = (hi / lo).powi(2).to_f64();
        if cond <= cond_limit {
            let rhs = phi_t.matmul(f)?;
            return SpectralDescriptors::new(cholesky_solve(&l, &rhs));
        }
    }

    let qr = PivotedQr::new(basis);
    if qr.rank() < k {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            expected: k,
        });
    }
    SpectralDescriptors::new(qr.solve_least_squares(f))
}

fn check_energy_shapes<T: Real>(
    op: &'static str,
    c: &Mat<T>,
    a: &SpectralDescriptors<T>,
    b: &SpectralDescriptors<T>,
    m: &PenaltyMask<T>,
) -> Result<()> {
    let k = c.rows();
    let ok = c.is_square()
        && a.values().shape() == b.values().shape()
        && a.k() == k
        && m.k() == k;
    if ok {
        Ok(())
    } else {
        Err(mismatch(
            op,
            format!(
                "C {:?}, A {:?}, B {:?}, M {:?}",
                c.shape(),
                a.values().shape(),
                b.values().shape(),
                m.values().shape()
            ),
        ))
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

/// `||C A - B||_F^2 + lambda * sum(M .* C .* C)`.
pub fn energy<T: Real>(
    c: &FunctionalMap<T>,
    a: &SpectralDescriptors<T>,
    b: &SpectralDescriptors<T>,
    m: &PenaltyMask<T>,
    lambda: f64,
) -> Result<T> {
    check_energy_shapes("energy", c.values(), a, b, m)?;
    check_lambda(lambda)?;
    let c = c.values();
    let fit = c.matmul(a.values())?.sub(b.values())?.frobenius_norm().powi(2);
    let reg: T = m
        .values()
        .as_slice()
        .iter()
        .zip(c.as_slice())
        .map(|(&w, &x)| w * x * x)
        .sum();
    Ok(fit + T::of(lambda) * reg)
}

/// Gradient of [`energy`] with respect to `C`:
/// `2 (C A A^T - B A^T) + 2 lambda (M .* C)`.
pub fn energy_gradient<T: Real>(
    c: &FunctionalMap<T>,
    a: &SpectralDescriptors<T>,
    b: &SpectralDescriptors<T>,
    m: &PenaltyMask<T>,
    lambda: f64,
) -> Result<Mat<T>> {
    check_energy_shapes("energy_gradient", c.values(), a, b, m)?;
    check_lambda(lambda)?;
    let r = normal_residual(c.values(), a.values(), b.values(), m.values(), T::of(lambda))?;
    Ok(r.scale(T::of(2.0)))
}

/// `C A A^T + lambda (M .* C) - B A^T`, shapes already checked.
pub(crate) fn normal_residual<T: Real>(
    c: &Mat<T>,
    a: &Mat<T>,
    b: &Mat<T>,
    m: &Mat<T>,
    lambda: T,
) -> Result<Mat<T>> {
    let aat = a.matmul_t(a)?;
    let bat = b.matmul_t(a)?;
    let reg = m.hadamard(c)?.scale(lambda);
    c.matmul(&aat)?.add(&reg)?.sub(&bat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
        Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn feats(m: Mat) -> VertexFeatures {
        VertexFeatures::new(m).unwrap()
    }

    #[test]
    fn identity_basis_projects_to_features() {
        let a = project_to_spectral(&Mat::identity(3), &feats(Mat::identity(3))).unwrap();
        assert_eq!(a.values(), &Mat::identity(3));
    }

    #[test]
    fn one_dimensional_least_squares() {
        let phi = Mat::from_rows(&[[2.0], [0.0]]).unwrap();
        let f = Mat::from_rows(&[[4.0], [0.0]]).unwrap();
        let a = project_to_spectral(&phi, &feats(f)).unwrap();
        assert_relative_eq!(a.values()[(0, 0)], 2.0, epsilon = 1e-15);
    }

    /// Brute-force `(Phi^T Phi)^-1 Phi^T F` by Gauss-Jordan on the small Gram matrix.
    fn normal_equations_oracle(phi: &Mat, f: &Mat) -> Mat {
        let k = phi.cols();
        let mut aug = vec![vec![0.0; k + f.cols()]; k];
        for i in 0..k {
            for j in 0..k {
                aug[i][j] = (0..phi.rows()).map(|r| phi[(r, i)] * phi[(r, j)]).sum();
            }
            for j in 0..f.cols() {
                aug[i][k + j] = (0..phi.rows()).map(|r| phi[(r, i)] * f[(r, j)]).sum();
            }
        }
        for p in 0..k {
            let piv = (p..k)
                .max_by(|&x, &y| aug[x][p].abs().total_cmp(&aug[y][p].abs()))
                .unwrap();
            aug.swap(p, piv);
            let d = aug[p][p];
            for v in aug[p].iter_mut() {
                *v /= d;
            }
            for r in 0..k {
                if r != p {
                    let l = aug[r][p];
                    let src = aug[p].clone();
                    for (x, s) in aug[r].iter_mut().zip(&src) {
                        *x -= l * s;
                    }
                }
            }
        }
        Mat::from_fn(k, f.cols(), |i, j| aug[i][k + j])
    }

    #[test]
    fn projection_matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phi = random(20, 5, &mut rng);
        let f = random(20, 3, &mut rng);
        let a = project_to_spectral(&phi, &feats(f.clone())).unwrap();
        let want = normal_equations_oracle(&phi, &f);
        assert!(a.values().max_abs_diff(&want).unwrap() < 1e-10);
    }

    #[test]
    fn qr_fallback_agrees_with_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let phi = random(30, 6, &mut rng);
        let f = random(30, 4, &mut rng);
        let fast = project_to_spectral_with(&phi, &feats(f.clone()), 1e10).unwrap();
        let qr = project_to_spectral_with(&phi, &feats(f), 0.0).unwrap();
        assert!(fast.values().max_abs_diff(qr.values()).unwrap() < 1e-12);
    }

    #[test]
    fn residual_is_orthogonal_to_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phi = random(25, 4, &mut rng);
        let f = random(25, 2, &mut rng);
        let a = project_to_spectral(&phi, &feats(f.clone())).unwrap();
        let resid = f.sub(&phi.matmul(a.values()).unwrap()).unwrap();
        let inner = phi.transpose().matmul(&resid).unwrap();
        assert!(inner.max_abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_basis_reports_rank() {
        let phi = Mat::from_rows(&[[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0], [1.0, 2.0, 1.0]])
            .unwrap();
        let f = Mat::from_fn(4, 1, |r, _| r as f64);
        let err = project_to_spectral(&phi, &feats(f)).unwrap_err();
        assert_eq!(err, Error::RankDeficient { rank: 2, expected: 3 });
    }

    #[test]
    fn projection_rejects_row_mismatch() {
        let err = project_to_spectral(&Mat::identity(3), &feats(Mat::identity(2))).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn spectrum_validates_order_and_basis() {
        assert!(Spectrum::new(vec![0.0, 1.0, 1.0, 3.0], None).is_ok());
        assert!(Spectrum::new(vec![0.0, 2.0, 1.0], None).is_err());
        assert!(Spectrum::new(vec![-0.1, 1.0], None).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0], Some(Mat::zeros(4, 3))).is_err());
        assert!(Spectrum::<f64>::new(vec![f64::NAN], None).is_err());
    }

    fn descriptors(m: Mat) -> SpectralDescriptors {
        SpectralDescriptors::new(m).unwrap()
    }

    fn map(m: Mat) -> FunctionalMap {
        FunctionalMap::new(m).unwrap()
    }

    #[test]
    fn energy_of_perfect_fit_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = descriptors(random(4, 6, &mut rng));
        let m = PenaltyMask::new(random(4, 4, &mut rng).map(f64::abs)).unwrap();
        let e = energy(&map(Mat::identity(4)), &a, &a, &m, 0.0).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn energy_of_zero_map_is_data_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let a = descriptors(random(3, 5, &mut rng));
        let b = descriptors(random(3, 5, &mut rng));
        let m = PenaltyMask::new(Mat::zeros(3, 3)).unwrap();
        let e = energy(&map(Mat::zeros(3, 3)), &a, &b, &m, 0.0).unwrap();
        assert_relative_eq!(e, b.values().frobenius_norm().powi(2), max_relative = 1e-14);
    }

    #[test]
    fn energy_rejects_negative_lambda_and_bad_shapes() {
        let a = descriptors(Mat::identity(2));
        let m = PenaltyMask::new(Mat::zeros(2, 2)).unwrap();
        let c = map(Mat::identity(2));
        assert_eq!(energy(&c, &a, &a, &m, -1.0), Err(Error::InvalidLambda(-1.0)));
        let big = map(Mat::identity(3));
        assert!(matches!(
            energy(&big, &a, &a, &m, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn projection_is_linear(seed in any::<u64>(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = random(15, 4, &mut rng);
            let f1 = random(15, 3, &mut rng);
            let f2 = random(15, 3, &mut rng);
            let mix = f1.scale(alpha).add(&f2.scale(beta)).unwrap();
            let lhs = project_to_spectral(&phi, &feats(mix)).unwrap();
            let p1 = project_to_spectral(&phi, &feats(f1)).unwrap();
            let p2 = project_to_spectral(&phi, &feats(f2)).unwrap();
            let rhs = p1.values().scale(alpha).add(&p2.values().scale(beta)).unwrap();
            let scale = 1.0 + rhs.max_abs();
            prop_assert!(lhs.values().max_abs_diff(&rhs).unwrap() <= 1e-12 * scale);
        }

        #[test]
        fn orthonormal_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Orthonormal columns from the Q factor of a random matrix.
            let raw = random(12, 5, &mut rng);
            let mut q = raw.clone();
            for j in 0..5 {
                for p in 0..j {
                    let d: f64 = (0..12).map(|r| q[(r, j)] * q[(r, p)]).sum();
                    for r in 0..12 {
                        q[(r, j)] -= d * q[(r, p)];
                    }
                }
                let n: f64 = (0..12).map(|r| q[(r, j)] * q[(r, j)]).sum::<f64>().sqrt();
                for r in 0..12 {
                    q[(r, j)] /= n;
                }
            }
            let a0 = random(5, 3, &mut rng);
            let a = project_to_spectral(&q, &feats(q.matmul(&a0).unwrap())).unwrap();
            prop_assert!(a.values().max_abs_diff(&a0).unwrap() <= 1e-12);
        }

        #[test]
        fn energy_is_non_negative(seed in any::<u64>(), lambda in 0.0..1e3f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = map(random(4, 4, &mut rng));
            let a = descriptors(random(4, 7, &mut rng));
            let b = descriptors(random(4, 7, &mut rng));
            let m = PenaltyMask::new(random(4, 4, &mut rng).map(f64::abs)).unwrap();
            prop_assert!(energy(&c, &a, &b, &m, lambda).unwrap() >= 0.0);
        }

        #[test]
        fn gradient_matches_finite_differences(seed in any::<u64>(), lambda in 0.0..10.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = 4;
            let c = random(k, k, &mut rng);
            let a = descriptors(random(k, 6, &mut rng));
            let b = descriptors(random(k, 6, &mut rng));
            let m = PenaltyMask::new(random(k, k, &mut rng).map(f64::abs)).unwrap();
            let g = energy_gradient(&map(c.clone()), &a, &b, &m, lambda).unwrap();
            let h = 1e-6;
            for i in 0..k {
                for j in 0..k {
                    let mut plus = c.clone();
                    plus[(i, j)] += h;
                    let mut minus = c.clone();
                    minus[(i, j)] -= h;
                    let fd = (energy(&map(plus), &a, &b, &m, lambda).unwrap()
                        - energy(&map(minus), &a, &b, &m, lambda).unwrap())
                        / (2.0 * h);
                    let scale = g[(i, j)].abs().max(1.0);
                    prop_assert!((fd - g[(i, j)]).abs() <= 1e-5 * scale, "fd {} vs {}", fd, g[(i, j)]);
                }
            }
        }
    }
}
