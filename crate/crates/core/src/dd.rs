//! Double-double arithmetic (about 32 significant digits).
//!
//! Smooth kernels on short blocks make the RBF saddle system badly conditioned
//! (condition numbers around 1e13 for five Gaussian centers on an interval of
//! width 0.1). Solving and evaluating in double-double keeps the cardinal
//! functions accurate to full f64 precision in that regime.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

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

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Multiplication by a power of two; exact.
    #[inline]
    pub fn ldexp(self, exp: i32) -> Self {
        let s = 2f64.powi(exp);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn powi(self, n: u32) -> Self {
        let mut base = self;
        let mut acc = Dd::ONE;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let y = self.hi.sqrt();
        let y = Dd::from_f64(y);
        // one Newton step doubles the number of correct digits
        y + (self - y * y) / (y.ldexp(1))
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = self - LN2 * Dd::from_f64(k);
        // shrink the argument so the Taylor series converges in a few terms
        const SQUARINGS: i32 = 10;
        let r = r.ldexp(-SQUARINGS);
        let mut term = r;
        let mut sum = Dd::ONE + r;
        for n in 2..=14 {
            term = term * r / Dd::from_f64(n as f64);
            sum += term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..SQUARINGS {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        let y = Dd::from_f64(self.hi.ln());
        // Newton on exp(y) = x
        y + self * (-y).exp() - Dd::ONE
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, rhs: Dd) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, rhs: Dd) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with mpmath at 40 digits, split into hi + lo.
    fn assert_close(x: Dd, hi: f64, lo: f64, rel: f64) {
        let err = (x - Dd { hi, lo }).to_f64().abs();
        assert!(err <= rel * hi.abs(), "{x:?} vs ({hi}, {lo}): err {err:e}");
    }

    #[test]
    fn exp_matches_reference() {
        // exp(-1) = 0.3678794411714423215955237701614608674458
        let e = Dd::from_f64(-1.0).exp();
        assert_close(e, 0.36787944117144233, -1.2428753672788363e-17, 1e-29);
        // exp(-0.0025) = 0.9975031223974601239849680418752775587392
        let e = Dd::from_f64(-0.0025).exp();
        assert_close(e, 0.9975031223974601, 3.9293423007145635e-17, 1e-29);
    }

    #[test]
    fn ln_and_sqrt_match_reference() {
        assert_close(Dd::from_f64(2.0).ln(), LN2.hi, LN2.lo, 1e-30);
        // sqrt(1.0001) = 1.000049998750062490587592529514701717476
        let s = Dd::from_f64(1.0001).sqrt();
        let err = (s * s - Dd::from_f64(1.0001)).to_f64().abs();
        assert!(err < 1e-30, "{err:e}");
    }

    #[test]
    fn division_round_trips() {
        let a = Dd::from_f64(1.0) / Dd::from_f64(3.0);
        let back = a * Dd::from_f64(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_ln_inverse() {
        for &x in &[0.001, 0.5, 3.0, 17.25, -40.0] {
            let y = Dd::from_f64(x).exp().ln();
            assert!((y - Dd::from_f64(x)).to_f64().abs() < 1e-28 * (1.0 + x.abs()));
        }
    }
}
