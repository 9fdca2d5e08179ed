//! Double-double arithmetic for the closed-form scattering coefficients.
//!
//! Values carry an unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, giving
//! roughly 106 bits of precision. Coefficients computed this way round to the
//! nearest double, so identities such as `R + T = 1` survive rounding even when
//! `R` is large.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

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
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    pub fn sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Self { hi, lo }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_sign_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    pub fn abs(self) -> Self {
        if self.is_sign_negative() {
            -self
        } else {
            self
        }
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// Square root of a non-negative value; negative input yields NaN.
    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Self::ZERO;
        }
        if self.is_sign_negative() {
            return Self::new(f64::NAN);
        }
        let s = self.hi.sqrt();
        let r = self - Self::product(s, s);
        let (hi, lo) = quick_two_sum(s, r.hi / (2.0 * s));
        Self { hi, lo }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Self::new(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Self::new(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{BigInt, BigRational, ToPrimitive};

    fn exact(d: DoubleDouble) -> BigRational {
        BigRational::from_float(d.hi).unwrap() + BigRational::from_float(d.lo).unwrap()
    }

    #[test]
    fn sum_and_product_are_exact() {
        let d = DoubleDouble::sum(1.0, 1e-20);
        assert_eq!(d.hi, 1.0);
        assert_eq!(d.lo, 1e-20);
        let p = DoubleDouble::product(0.1, 0.1);
        let want = BigRational::from_float(0.1).unwrap().pow(2);
        assert_eq!(exact(p), want);
    }

    #[test]
    fn sqrt_two_to_double_double_precision() {
        let s = DoubleDouble::new(2.0).sqrt();
        let err = exact(s * s) - BigRational::from_integer(BigInt::from(2));
        assert!(err.to_f64().unwrap().abs() < 1e-30);
    }

    #[test]
    fn division_to_double_double_precision() {
        let third = DoubleDouble::ONE / DoubleDouble::new(3.0);
        let err = exact(third * DoubleDouble::new(3.0)) - BigRational::from_integer(BigInt::from(1));
        assert!(err.to_f64().unwrap().abs() < 1e-30);
        assert_eq!(third.to_f64(), 1.0 / 3.0);
    }
}
