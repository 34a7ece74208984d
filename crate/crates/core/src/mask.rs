//! Entry-wise penalty masks for the map regularizer.

use crate::error::{mismatch, Error, Result};
use crate::linalg::{Mat, Real};

/// Default imaginary offset of the resolvent mask.
pub const DEFAULT_SIGMA: f64 = 0.5;

/// Non-negative `k x k` weights on the entries of a functional map.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyMask<T = f64>(Mat<T>);

impl<T: Real> PenaltyMask<T> {
    pub fn new(values: Mat<T>) -> Result<Self> {
        if !values.is_square() {
            return Err(mismatch(
                "PenaltyMask::new",
                format!("mask must be square, got {:?}", values.shape()),
            ));
        }
        if values.as_slice().iter().any(|&w| !(w >= T::zero() && w.is_finite())) {
            return Err(Error::InvalidParameter(
                "mask entries must be finite and non-negative".into(),
            ));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Mat<T> {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.rows()
    }

    pub fn cast<U: Real>(&self) -> PenaltyMask<U> {
        PenaltyMask(self.0.cast())
    }
}

/// Which mask family to build.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskKind {
    Commutativity,
    Resolvent { sigma: f64 },
}

impl MaskKind {
    pub fn build<T: Real>(self, lambda1: &[T], lambda2: &[T]) -> Result<PenaltyMask<T>> {
        match self {
            MaskKind::Commutativity => mask_commutativity(lambda1, lambda2),
            MaskKind::Resolvent { sigma } => mask_resolvent(lambda1, lambda2, sigma),
        }
    }
}

fn check_spectra<T: Real>(op: &'static str, l1: &[T], l2: &[T]) -> Result<()> {
    if l1.len() != l2.len() {
        return Err(mismatch(
            op,
            format!("spectra have lengths {} and {}", l1.len(), l2.len()),
        ));
    }
    if l1.iter().chain(l2).any(|&x| !(x >= T::zero() && x.is_finite())) {
        return Err(Error::InvalidParameter(
            "eigenvalues must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// `M(i, j) = (lambda2[i] - lambda1[j])^2`.
pub fn mask_commutativity<T: Real>(lambda1: &[T], lambda2: &[T]) -> Result<PenaltyMask<T>> {
    check_spectra("mask_commutativity", lambda1, lambda2)?;
    let k = lambda1.len();
    Ok(PenaltyMask(Mat::from_fn(k, k, |i, j| {
        let d = lambda2[i] - lambda1[j];
        d * d
    })))
}

/// Squared modulus of the difference of the resolvents `1 / (mu - i sigma)`
/// of the max-normalized eigenvalues.
pub fn mask_resolvent<T: Real>(lambda1: &[T], lambda2: &[T], sigma: f64) -> Result<PenaltyMask<T>> {
    check_spectra("mask_resolvent", lambda1, lambda2)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "resolvent sigma must be positive, got {sigma}"
        )));
    }
    let top = lambda1
        .iter()
        .chain(lambda2)
        .fold(0.0f64, |m, &x| m.max(x.to_f64()));
    if top == 0.0 {
        return Err(Error::InvalidParameter(
            "resolvent mask needs a non-zero eigenvalue".into(),
        ));
    }
    let s2 = sigma * sigma;
    let parts = |l: &[T]| -> Vec<(f64, f64)> {
        l.iter()
            .map(|&x| {
                let mu = x.to_f64() / top;
                let den = mu * mu + s2;
                (mu / den, sigma / den)
            })
            .collect()
    };
    let (p1, p2) = (parts(lambda1), parts(lambda2));
    let k = lambda1.len();
    Ok(PenaltyMask(Mat::from_fn(k, k, |i, j| {
        let re = p2[i].0 - p1[j].0;
        let im = p2[i].1 - p1[j].1;
        T::of(re * re + im * im)
    })))
}
