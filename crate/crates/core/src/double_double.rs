//! Double-double floating point: an unevaluated sum `hi + lo` of two `f64`
//! carrying about 106 bits of significand.
//!
//! Arithmetic, `sqrt`, `exp`, `exp_m1`, `ln` and `powi` are evaluated to full
//! double-double precision. The remaining `Float` methods (trigonometry,
//! rounding helpers) fall back to `f64` accuracy on the leading component.
//! The type exists so that the closed-form moment expressions, which cancel
//! heavily for small `kappa * t`, can be evaluated without that cancellation
//! swamping the result.

use std::cmp::Ordering;
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Float, Num, NumCast, One, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: 6.931_471_805_599_453e-1,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub const fn lift(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = quick_two_sum(a, b);
        Self { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::from_sum(p, e + self.lo * b)
    }

    fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self::new(self.hi * s, self.lo * s)
    }

    fn exp_small(r: Self) -> Self {
        // Taylor series of e^r - 1 for |r| <= ln2 / 1024
        let mut term = r;
        let mut sum = r;
        for k in 2..30 {
            term = term * r / Self::lift(k as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 * sum.hi.abs().max(1e-300) {
                break;
            }
        }
        sum
    }

    fn expm1_reduced(self) -> (Self, i32) {
        // x = k ln2 + r, e^x - 1 = 2^k (e^r) - 1; returns (e^r - 1, k)
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        let r = r.ldexp(-10);
        let mut em1 = Self::exp_small(r);
        // (1 + m)^2 - 1 = m (2 + m)
        for _ in 0..10 {
            em1 = em1 * (em1 + Self::lift(2.0));
        }
        (em1, k as i32)
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::lift(x)
    }
}

impl From<DoubleDouble> for f64 {
    fn from(x: DoubleDouble) -> f64 {
        x.hi + x.lo
    }
}

impl PartialEq for DoubleDouble {
    fn eq(&self, other: &Self) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Self::from_sum(s1, s2 + t2)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        Self::from_sum(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Self::new(q1, q2) + Self::lift(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        self - (self / b).trunc() * b
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self::lift(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self::lift(1.0)
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::lift)
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i64(&self) -> Option<i64> {
        self.hi.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.hi.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }
}

impl NumCast for DoubleDouble {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Self::lift)
    }
}

impl num_traits::FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        Some(Self::from_sum(hi, (n - hi as i64) as f64))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        Some(Self::from_sum(hi, (n as i128 - hi as i128) as f64))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Self::lift(n))
    }
}

impl Float for DoubleDouble {
    fn nan() -> Self {
        Self::lift(f64::NAN)
    }
    fn infinity() -> Self {
        Self::lift(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Self::lift(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Self::lift(-0.0)
    }
    fn min_value() -> Self {
        Self::lift(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Self::lift(f64::MIN_POSITIVE)
    }
    fn max_value() -> Self {
        Self::lift(f64::MAX)
    }
    fn epsilon() -> Self {
        Self::lift(4.930_380_657_631_324e-32)
    }
    fn is_nan(self) -> bool {
        self.hi.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi.classify()
    }
    fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            Self::from_sum(hi, self.lo.floor())
        } else {
            Self::lift(hi)
        }
    }
    fn ceil(self) -> Self {
        -(-self).floor()
    }
    fn round(self) -> Self {
        (self + Self::lift(0.5)).floor()
    }
    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }
    fn fract(self) -> Self {
        self - self.trunc()
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Self::lift(self.hi.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
    fn powf(self, n: Self) -> Self {
        (n * self.ln()).exp()
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::lift(self.hi.sqrt());
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - Self::new(p, e)).hi;
        Self::from_sum(x, r / (2.0 * x))
    }
    fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Self::infinity();
        }
        if self.hi < -745.0 {
            return Self::zero();
        }
        let (em1, k) = self.expm1_reduced();
        (em1 + Self::one()).ldexp(k)
    }
    fn exp2(self) -> Self {
        (self * LN2).exp()
    }
    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self::lift(self.hi.ln());
        }
        let mut y = Self::lift(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Self::one();
        }
        y
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / LN2
    }
    fn log10(self) -> Self {
        self.ln() / Self::lift(10.0).ln()
    }
    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        Self::lift(self.hi.cbrt())
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn sin(self) -> Self {
        Self::lift(self.hi.sin())
    }
    fn cos(self) -> Self {
        Self::lift(self.hi.cos())
    }
    fn tan(self) -> Self {
        Self::lift(self.hi.tan())
    }
    fn asin(self) -> Self {
        Self::lift(self.hi.asin())
    }
    fn acos(self) -> Self {
        Self::lift(self.hi.acos())
    }
    fn atan(self) -> Self {
        Self::lift(self.hi.atan())
    }
    fn atan2(self, other: Self) -> Self {
        Self::lift(self.hi.atan2(other.hi))
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        // below ln2 / 2 the reduction leaves k = 0, so no cancellation occurs
        if self.hi.abs() < 0.34 {
            let (em1, k) = self.expm1_reduced();
            debug_assert_eq!(k, 0);
            em1
        } else {
            self.exp() - Self::one()
        }
    }
    fn ln_1p(self) -> Self {
        (self + Self::one()).ln()
    }
    fn sinh(self) -> Self {
        Self::lift(self.hi.sinh())
    }
    fn cosh(self) -> Self {
        Self::lift(self.hi.cosh())
    }
    fn tanh(self) -> Self {
        Self::lift(self.hi.tanh())
    }
    fn asinh(self) -> Self {
        Self::lift(self.hi.asinh())
    }
    fn acosh(self) -> Self {
        Self::lift(self.hi.acosh())
    }
    fn atanh(self) -> Self {
        Self::lift(self.hi.atanh())
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::lift(x)
    }

    // e^x - 1 by its Taylor series summed in double-double arithmetic
    fn expm1_series(x: DoubleDouble) -> DoubleDouble {
        let mut term = x;
        let mut sum = term;
        for j in 2..80 {
            term = term * x / dd(j as f64);
            sum = sum + term;
        }
        sum
    }

    #[test]
    fn arithmetic_carries_the_low_word() {
        let third = dd(1.0) / dd(3.0);
        let back = third * dd(3.0) - dd(1.0);
        assert!(back.hi().abs() < 1e-31);
        let tiny = (dd(1.0) + dd(1e-20)) - dd(1.0);
        assert!((tiny.hi() - 1e-20).abs() < 1e-35);
    }

    #[test]
    fn exp_and_expm1_to_double_double_precision() {
        for &x in &[-3.0, -1.0, -0.44, -0.35, -0.1, -1e-3, 1e-8, 0.3, 0.36, 0.49, 2.5] {
            let e = dd(x).exp();
            let ms = expm1_series(dd(x));
            let s = ms + dd(1.0);
            assert!(((e - s) / s).hi().abs() < 1e-29, "exp({x})");
            let m = dd(x).exp_m1();
            assert!(((m - ms) / ms).hi().abs() < 1e-28, "expm1({x})");
        }
    }

    #[test]
    fn sqrt_ln_powi() {
        let two = dd(2.0);
        let r = two.sqrt();
        assert!((r * r - two).hi().abs() < 1e-31);
        let l = dd(10.0).ln();
        assert!((l.exp() - dd(10.0)).hi().abs() < 1e-29);
        assert!((dd(1.1).powi(5) - dd(1.1) * dd(1.1) * dd(1.1) * dd(1.1) * dd(1.1)).hi().abs() < 1e-30);
        assert!((dd(2.0).powi(-2) - dd(0.25)).hi().abs() < 1e-32);
    }
}
