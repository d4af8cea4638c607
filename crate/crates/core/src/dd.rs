//! Double-double arithmetic.
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving
//! roughly 106 bits of significand. Only the handful of operations needed for
//! accurate phase reduction are provided.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
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

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    pub const HALF: Self = Self { hi: 0.5, lo: 0.0 };

    /// Normalizes an arbitrary pair.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        Self { hi: h, lo: l }
    }

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact conversion of a 64-bit integer.
    pub fn from_i64(n: i64) -> Self {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Self::new(hi, lo)
    }

    /// Conversion of a 128-bit integer, correctly rounded to ~106 bits.
    pub fn from_i128(n: i128) -> Self {
        let hi = n as f64;
        // n - hi fits in an i128 because hi is n rounded to 53 bits.
        let rest = n - hi as i128;
        let mid = rest as f64;
        let lo = (rest - mid as i128) as f64;
        let (h, l) = quick_two_sum(hi, mid);
        Self::new(h, l + lo)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (h, l) = quick_two_sum(p, e);
        Self { hi: h, lo: l }
    }

    /// Exact product with an integer of magnitude below 2^53.
    pub fn mul_int(self, k: i64) -> Self {
        debug_assert!(k.unsigned_abs() < (1u64 << 53));
        self.mul_f64(k as f64)
    }

    pub fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Self { hi: h, lo: l } + Self::from_f64(q3)
    }

    /// Square root by one Newton correction of the f64 estimate.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::ZERO;
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = Self::new(p, e);
        let diff = (self - r).to_f64();
        Self::new(x, diff / (2.0 * x))
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            Self::new(fh, self.lo.floor())
        } else {
            Self::from_f64(fh)
        }
    }

    /// Fractional part in [0, 1). The result may have `hi == 1.0` with a
    /// negative low word.
    pub fn fract(self) -> Self {
        let f = self.hi.floor();
        // hi - floor(hi) is exact.
        let mut r = Self::new(self.hi - f, self.lo);
        if r < Self::ZERO {
            r = r + Self::ONE;
        } else if r >= Self::ONE {
            r = r - Self::ONE;
        }
        r
    }

    /// Distance to the nearest integer, in [0, 1/2].
    pub fn torus_norm(self) -> Self {
        let f = self.fract();
        if f > Self::HALF {
            Self::ONE - f
        } else {
            f
        }
    }

    /// Signed distance to the nearest integer, in [-1/2, 1/2).
    pub fn centered_fract(self) -> Self {
        let f = self.fract();
        if f >= Self::HALF {
            f - Self::ONE
        } else {
            f
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (h, l) = quick_two_sum(s, e + f);
        Self { hi: h, lo: l }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p, e);
        Self { hi: h, lo: l }
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_round_trip() {
        let n: i128 = (1i128 << 100) + 12345;
        let d = DoubleDouble::from_i128(n);
        assert_eq!(d.hi as i128 + d.lo as i128, n);
    }

    #[test]
    fn sqrt_five_squares_back() {
        let r = DoubleDouble::from_f64(5.0).sqrt();
        let back = r * r - DoubleDouble::from_f64(5.0);
        assert!(back.to_f64().abs() < 1e-30);
    }

    #[test]
    fn division_reconstructs() {
        let a = DoubleDouble::from_i64(2);
        let b = DoubleDouble::from_i64(7);
        let q = a.div(b);
        let err = (q * b - a).to_f64();
        assert!(err.abs() < 1e-31);
    }

    #[test]
    fn fract_handles_negative_low_part() {
        let x = DoubleDouble { hi: 3.0, lo: -1e-20 };
        let f = x.fract();
        assert!(f >= DoubleDouble::ZERO && f < DoubleDouble::ONE);
        assert_eq!(f.lo, -1e-20);
        assert_eq!(x.torus_norm().to_f64(), 1e-20);
    }

    #[test]
    fn fract_of_negative_values() {
        let f = DoubleDouble::from_f64(-0.25).fract();
        assert_eq!(f.to_f64(), 0.75);
        assert_eq!(DoubleDouble::from_f64(-2.0).fract().to_f64(), 0.0);
    }
}
