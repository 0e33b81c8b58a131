//! Linear algebra used by the discretization and the spectral scans.
//!
//! Everything here is sized for desk-scale network problems: a few thousand
//! unknowns whose sparsity pattern follows a metric graph. After a reverse
//! Cuthill-McKee ordering such matrices have a narrow band, so a banded LU
//! with partial pivoting is both simple and fast.

mod banded;
mod hermitian3;
mod sparse;

pub use banded::{rcm_ordering, BandedLu};
pub use hermitian3::{hermitian3_eigenvalues, spectral_norm3, Hermitian3};
pub use sparse::CsrMatrix;

use num_complex::Complex64;

/// Field scalar accepted by the sparse and banded routines.
pub trait Scalar:
    Copy
    + Default
    + PartialEq
    + std::fmt::Debug
    + num_traits::NumAssign
    + std::ops::Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn from_real(x: f64) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Euclidean inner product `Σ conj(x_i) y_i`.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter()
        .map(|v| {
            let m = v.modulus();
            m * m
        })
        .sum::<f64>()
        .sqrt()
}
