//! Hyper-dual numbers: second-order forward-mode differentiation in one
//! pass.
//!
//! A [`HyperDual`] carries a value, two independent first-order
//! sensitivities and one mixed second-order sensitivity, with the
//! truncated algebra
//!
//! ```text
//! e1·e1 = e2·e2 = 0,   e1·e2 = e12,   e12·e1 = e12·e2 = e12·e12 = 0.
//! ```
//!
//! Seeding `e1` along coordinate `i` and `e2` along coordinate `j` of a
//! function's inputs makes the output's `e12` component the exact mixed
//! partial `∂²f/∂xᵢ∂xⱼ` — no truncation error, unlike finite differences.

use super::scalar::Scalar;
use core::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual {
    /// Real value.
    pub re: f64,
    /// First-order sensitivity along seed direction 1.
    pub e1: f64,
    /// First-order sensitivity along seed direction 2.
    pub e2: f64,
    /// Mixed second-order sensitivity.
    pub e12: f64,
}

impl HyperDual {
    pub fn new(re: f64, e1: f64, e2: f64, e12: f64) -> Self {
        Self { re, e1, e2, e12 }
    }

    /// A constant: all sensitivities zero.
    pub fn constant(re: f64) -> Self {
        Self::new(re, 0.0, 0.0, 0.0)
    }

    /// Input variable seeded in the first derivative slot.
    pub fn seeded_e1(re: f64) -> Self {
        Self::new(re, 1.0, 0.0, 0.0)
    }

    /// Input variable seeded in the second derivative slot.
    pub fn seeded_e2(re: f64) -> Self {
        Self::new(re, 0.0, 1.0, 0.0)
    }

    /// Input variable seeded in both slots (diagonal Hessian entry).
    pub fn seeded_both(re: f64) -> Self {
        Self::new(re, 1.0, 1.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.e1.is_finite() && self.e2.is_finite() && self.e12.is_finite()
    }

    /// Chain rule for a unary smooth primitive with value `f0`, first
    /// derivative `f1` and second derivative `f2` at `self.re`.
    #[inline]
    fn compose(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            re: f0,
            e1: f1 * self.e1,
            e2: f1 * self.e2,
            e12: f1 * self.e12 + f2 * self.e1 * self.e2,
        }
    }

    /// Chain rule for a binary smooth primitive `φ(u, w)` with the partial
    /// derivatives of `φ` evaluated at `(u.re, w.re)`.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn compose2(u: Self, w: Self, f0: f64, fu: f64, fw: f64, fuu: f64, fuw: f64, fww: f64) -> Self {
        Self {
            re: f0,
            e1: fu * u.e1 + fw * w.e1,
            e2: fu * u.e2 + fw * w.e2,
            e12: fu * u.e12
                + fw * w.e12
                + fuu * u.e1 * u.e2
                + fuw * (u.e1 * w.e2 + u.e2 * w.e1)
                + fww * w.e1 * w.e2,
        }
    }

    /// Multiplicative inverse, 1/x.
    pub fn recip(self) -> Self {
        let inv = 1.0 / self.re;
        let inv2 = inv * inv;
        self.compose(inv, -inv2, 2.0 * inv2 * inv)
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.re + rhs.re,
            self.e1 + rhs.e1,
            self.e2 + rhs.e2,
            self.e12 + rhs.e12,
        )
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.re - rhs.re,
            self.e1 - rhs.e1,
            self.e2 - rhs.e2,
            self.e12 - rhs.e12,
        )
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        // (ab)_12 = a_12 b + a_1 b_2 + a_2 b_1 + a b_12
        Self::new(
            self.re * rhs.re,
            self.e1 * rhs.re + self.re * rhs.e1,
            self.e2 * rhs.re + self.re * rhs.e2,
            self.e12 * rhs.re + self.e1 * rhs.e2 + self.e2 * rhs.e1 + self.re * rhs.e12,
        )
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for HyperDual {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl Scalar for HyperDual {
    fn from_f64(value: f64) -> Self {
        Self::constant(value)
    }

    fn real(self) -> f64 {
        self.re
    }

    fn exp(self) -> Self {
        let e = libm::exp(self.re);
        self.compose(e, e, e)
    }

    fn ln(self) -> Self {
        let inv = 1.0 / self.re;
        self.compose(libm::log(self.re), inv, -inv * inv)
    }

    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.re);
        self.compose(s, 0.5 / s, -0.25 / (s * self.re))
    }

    fn sin(self) -> Self {
        let (s, c) = (libm::sin(self.re), libm::cos(self.re));
        self.compose(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = (libm::sin(self.re), libm::cos(self.re));
        self.compose(c, -s, -c)
    }

    fn tan(self) -> Self {
        let t = libm::tan(self.re);
        let sec2 = 1.0 + t * t;
        self.compose(t, sec2, 2.0 * t * sec2)
    }

    fn atan(self) -> Self {
        let den = 1.0 + self.re * self.re;
        self.compose(libm::atan(self.re), 1.0 / den, -2.0 * self.re / (den * den))
    }

    fn atan2(self, other: Self) -> Self {
        // φ(u, w) = atan2(u, w); the value picks the proper branch, the
        // derivatives are those of atan(u/w) which are branch-independent.
        let (u, w) = (self.re, other.re);
        let r2 = u * u + w * w;
        let r4 = r2 * r2;
        Self::compose2(
            self,
            other,
            libm::atan2(u, w),
            w / r2,
            -u / r2,
            -2.0 * u * w / r4,
            (u * u - w * w) / r4,
            2.0 * u * w / r4,
        )
    }

    fn powf(self, exponent: f64) -> Self {
        let f1 = exponent * libm::pow(self.re, exponent - 1.0);
        let f2 = exponent * (exponent - 1.0) * libm::pow(self.re, exponent - 2.0);
        self.compose(libm::pow(self.re, exponent), f1, f2)
    }
}
