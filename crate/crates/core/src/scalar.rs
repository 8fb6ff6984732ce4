//! Coefficient fields for germ arithmetic.
//!
//! Two backends are provided: [`C64`] (binary64 real and imaginary parts) and
//! [`GaussRational`] (pairs of arbitrary-precision rationals, no rounding).
//! Every higher module is generic over [`Scalar`].

use alloc::string::String;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Complex numbers with binary64 parts.
pub type C64 = Complex<f64>;

/// Exact Gaussian rationals.
pub type GaussRational = Complex<BigRational>;

/// A commutative field with a conjugation automorphism.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact and zero tests carry no tolerance.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn imag_unit() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_gaussian(re: &BigRational, im: &BigRational) -> Self;

    fn conj(&self) -> Self;
    fn is_zero(&self) -> bool;

    /// Modulus as a float (approximate for the exact backend).
    fn modulus(&self) -> f64;
    fn to_c64(&self) -> C64;

    /// `self += a * b` without consuming either factor.
    fn add_mul_assign(&mut self, a: &Self, b: &Self);
    fn add_assign_ref(&mut self, other: &Self);

    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }

    fn scale_int(&self, n: i64) -> Self {
        self.clone() * Self::from_int(n)
    }

    /// Zero test: exact in the exact backend, `|x| <= tol` otherwise.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.modulus() <= tol
        }
    }

    /// Real and imaginary parts rendered for reports.
    fn render(&self) -> (String, String);
}

impl Scalar for C64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex::new(1.0, 0.0)
    }
    fn imag_unit() -> Self {
        Complex::new(0.0, 1.0)
    }
    fn from_int(n: i64) -> Self {
        Complex::new(n as f64, 0.0)
    }
    fn from_gaussian(re: &BigRational, im: &BigRational) -> Self {
        Complex::new(ratio_to_f64(re), ratio_to_f64(im))
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn modulus(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    #[inline]
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        self.re += a.re * b.re - a.im * b.im;
        self.im += a.re * b.im + a.im * b.re;
    }
    #[inline]
    fn add_assign_ref(&mut self, other: &Self) {
        self.re += other.re;
        self.im += other.im;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn scale_int(&self, n: i64) -> Self {
        self * n as f64
    }
    fn render(&self) -> (String, String) {
        (alloc::format!("{:.17e}", self.re), alloc::format!("{:.17e}", self.im))
    }
}

impl Scalar for GaussRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn imag_unit() -> Self {
        Complex::new(BigRational::zero(), BigRational::one())
    }
    fn from_int(n: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }
    fn from_gaussian(re: &BigRational, im: &BigRational) -> Self {
        Complex::new(re.clone(), im.clone())
    }
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn modulus(&self) -> f64 {
        libm::hypot(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
    fn to_c64(&self) -> C64 {
        Complex::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        if Scalar::is_zero(a) || Scalar::is_zero(b) {
            return;
        }
        *self += a * b;
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn scale_int(&self, n: i64) -> Self {
        let k = BigRational::from_integer(BigInt::from(n));
        Complex::new(&self.re * &k, &self.im * &k)
    }
    fn render(&self) -> (String, String) {
        (alloc::format!("{}", self.re), alloc::format!("{}", self.im))
    }
}

/// Nearest binary64 value of a big rational (saturating for huge magnitudes).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both parts into range before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 900).max(0) as usize;
    let shift_d = (db - 900).max(0) as usize;
    let n = (r.numer().abs() >> shift_n).to_f64().unwrap_or(f64::MAX);
    let d = (r.denom() >> shift_d).to_f64().unwrap_or(f64::MAX);
    let mag = n / d * libm::exp2((shift_n as i64 - shift_d as i64) as f64);
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Principal complex cube root.
pub fn principal_cbrt(z: C64) -> C64 {
    if z.re == 0.0 && z.im == 0.0 {
        return z;
    }
    let r = libm::cbrt(libm::hypot(z.re, z.im));
    let theta = libm::atan2(z.im, z.re) / 3.0;
    Complex::new(r * libm::cos(theta), r * libm::sin(theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_addition_has_no_rounding() {
        let a = GaussRational::from_gaussian(&q(1, 3), &q(-2, 7));
        let b = GaussRational::from_gaussian(&q(10_000_001, 9), &q(1, 1_000_003));
        assert_eq!(a.clone() + b.clone() - b, a);
    }

    #[test]
    fn conjugation_is_an_involutive_automorphism() {
        let a = GaussRational::from_gaussian(&q(3, 5), &q(7, 2));
        let b = GaussRational::from_gaussian(&q(-1, 4), &q(1, 9));
        assert_eq!(a.conj().conj(), a);
        assert_eq!((a.clone() * b.clone()).conj(), a.conj() * b.conj());
        let real = GaussRational::from_gaussian(&q(5, 3), &q(0, 1));
        assert_eq!(real.conj(), real);
    }

    #[test]
    fn big_rationals_convert_without_overflow() {
        let huge = BigRational::new(BigInt::from(3) << 2000usize, BigInt::from(1) << 1999usize);
        assert!((ratio_to_f64(&huge) - 6.0).abs() < 1e-12);
        assert_eq!(ratio_to_f64(&q(-1, 4)), -0.25);
    }

    #[test]
    fn cube_root_is_principal() {
        let c = principal_cbrt(Complex::new(-8.0, 0.0));
        assert!((c - Complex::new(1.0, 3f64.sqrt())).norm() < 1e-12);
        let w = principal_cbrt(Complex::new(0.3, -1.7));
        assert!((w * w * w - Complex::new(0.3, -1.7)).norm() < 1e-12);
    }
}
