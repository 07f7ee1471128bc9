//! Numeric field abstraction shared by every module.
//!
//! All algorithms are generic over [`Scalar`]. Two implementations exist:
//! [`Rational`] (exact, arbitrary precision) and `f64` (tolerance based).
//! The mode is a property of the type, so one instance never mixes them.

use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;

/// Absolute tolerance used by the float mode for feasibility and equality checks.
pub const FLOAT_TOL: f64 = 1e-9;

/// Which arithmetic an instance runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NumericMode {
    Rational,
    Float,
}

impl NumericMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NumericMode::Rational => "rational",
            NumericMode::Float => "float",
        }
    }
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An ordered field with either exact or tolerance-based comparisons.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const MODE: NumericMode;

    /// Absolute comparison tolerance; `0.0` in exact mode.
    fn tolerance() -> f64;

    fn from_i64(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Converts a float. Exact in rational mode (the binary value of `v`).
    fn from_f64(v: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;

    /// Square root when the field supports it (float only).
    fn try_sqrt(&self) -> Option<Self>;

    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn div_ref(&self, other: &Self) -> Self;

    /// `self -= a * b`, the hot operation of every pivot.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);

    /// `self += a * b`.
    fn add_mul_assign(&mut self, a: &Self, b: &Self);

    /// Nearest "simple" value to `v`: a continued-fraction approximant with
    /// denominator at most `max_den` in rational mode, `v` itself in float mode.
    fn rationalize(v: f64, max_den: u64) -> Self;

    fn is_zero_tol(&self) -> bool {
        self.to_f64().abs() <= Self::tolerance()
    }

    fn is_pos(&self) -> bool {
        self.to_f64() > Self::tolerance()
    }

    fn is_neg(&self) -> bool {
        self.to_f64() < -Self::tolerance()
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self.sub_ref(other).is_zero_tol()
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn tolerance() -> f64 {
        FLOAT_TOL
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        libm::fabs(*self)
    }

    fn try_sqrt(&self) -> Option<Self> {
        Some(libm::sqrt(*self))
    }

    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn rationalize(v: f64, _max_den: u64) -> Self {
        v
    }
}

impl Scalar for Rational {
    const MODE: NumericMode = NumericMode::Rational;

    fn tolerance() -> f64 {
        0.0
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Self {
        Rational::from_float(v).unwrap_or_else(Rational::zero)
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn try_sqrt(&self) -> Option<Self> {
        None
    }

    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }

    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self -= a * b;
    }

    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self += a * b;
    }

    fn rationalize(v: f64, max_den: u64) -> Self {
        let (n, d) = best_rational(v, max_den);
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn is_zero_tol(&self) -> bool {
        self.is_zero()
    }

    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }

    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
}

fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both parts down to a representable range.
    let bits = r.numer().bits().max(r.denom().bits());
    let shift = bits.saturating_sub(1000) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    if d == 0.0 {
        if n.is_sign_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        n / d
    }
}

/// Best rational approximation of `v` with denominator at most `max_den`
/// (continued-fraction convergents plus the final semiconvergent).
pub fn best_rational(v: f64, max_den: u64) -> (i64, i64) {
    if !v.is_finite() {
        return (0, 1);
    }
    let neg = v < 0.0;
    let x = libm::fabs(v);
    if x > 9.0e15 {
        let r = libm::round(x) as i64;
        return (if neg { -r } else { r }, 1);
    }
    let max_den = max_den.max(1) as i128;
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut frac = x;
    loop {
        let a = libm::floor(frac);
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den {
            // Semiconvergent with the largest admissible partial quotient.
            let k = (max_den - q0) / q1.max(1);
            let ps = k * p1 + p0;
            let qs = k * q1 + q0;
            let err_s = libm::fabs(x - ps as f64 / qs as f64);
            let err_c = if q1 == 0 { f64::INFINITY } else { libm::fabs(x - p1 as f64 / q1 as f64) };
            if qs > 0 && err_s < err_c {
                p1 = ps;
                q1 = qs;
            }
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let rem = frac - a;
        if rem < 1e-300 || libm::fabs(x - p1 as f64 / q1 as f64) == 0.0 {
            break;
        }
        frac = 1.0 / rem;
        if !frac.is_finite() {
            break;
        }
    }
    let g = p1.gcd(&q1).max(1);
    let (p, q) = (p1 / g, q1 / g);
    let p = if neg { -p } else { p };
    (p as i64, q.max(1) as i64)
}

/// Formats a rational as `p/q` (or `p` when integral), the wire form used by reports.
pub fn format_exact<S: Scalar>(v: &S) -> alloc::string::String {
    alloc::format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_rational_recovers_simple_fractions() {
        assert_eq!(best_rational(0.25, 1000), (1, 4));
        assert_eq!(best_rational(-2.0 / 3.0, 1000), (-2, 3));
        assert_eq!(best_rational(9.0 / 25.0, 1_000_000), (9, 25));
        assert_eq!(best_rational(0.0, 10), (0, 1));
        assert_eq!(best_rational(3.0, 10), (3, 1));
        // pi with a small denominator bound
        assert_eq!(best_rational(core::f64::consts::PI, 10), (22, 7));
        assert_eq!(best_rational(core::f64::consts::PI, 200), (355, 113));
    }

    #[test]
    fn rational_mode_is_exact() {
        let a = Rational::from_ratio(1, 3);
        let b = Rational::from_ratio(2, 3);
        assert!((a.clone() + b) == Rational::from_i64(1));
        assert!(!Rational::from_ratio(1, 1_000_000_000_000).is_zero_tol());
        assert!(1e-12f64.is_zero_tol());
        assert_eq!(Rational::from_f64(0.5), Rational::from_ratio(1, 2));
        assert_eq!(Scalar::to_f64(&Rational::from_ratio(-7, 2)), -3.5);
    }

    #[test]
    fn sub_mul_assign_matches_plain_arithmetic() {
        let mut x = Rational::from_i64(5);
        x.sub_mul_assign(&Rational::from_ratio(1, 2), &Rational::from_i64(4));
        assert_eq!(x, Rational::from_i64(3));
        let mut y = 5.0f64;
        y.add_mul_assign(&0.5, &4.0);
        assert_eq!(y, 7.0);
    }
}
