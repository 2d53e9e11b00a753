//! The scalar abstraction that every smooth evaluator is written against,
//! and the first-order tangent carrier [`Dual`] used to push directions
//! through maps.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// A commutative ring of "numbers" that all smooth evaluators operate on.
///
/// Implementors: `f64` (plain evaluation), [`HyperDual`](super::HyperDual)
/// (exact first and second derivatives) and [`Dual<T>`] over either
/// (a directional derivative stacked on top).
///
/// `powi` has a default binary-exponentiation implementation so that
/// integer powers stay valid for negative bases on every carrier.
pub trait Scalar:
    Copy
    + Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_f64(value: f64) -> Self;
    /// Leading real part (the plain value underneath all seeds).
    fn real(self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn atan(self) -> Self;
    /// Two-argument arctangent; `self` is the ordinate, `other` the abscissa.
    fn atan2(self, other: Self) -> Self;
    /// Real power, valid for positive base only (NaN otherwise, caught at
    /// the evaluation boundary).
    fn powf(self, exponent: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    /// Integer power by binary exponentiation; negative exponents via the
    /// reciprocal, so `x.powi(2)` is exact for negative `x`.
    fn powi(self, exponent: i32) -> Self {
        let mut base = if exponent < 0 {
            Self::one() / self
        } else {
            self
        };
        let mut k = exponent.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
}

// All elementary functions on f64 are routed through libm so that results
// are identical with and without the `std` feature.
impl Scalar for f64 {
    fn from_f64(value: f64) -> Self {
        value
    }

    fn real(self) -> f64 {
        self
    }

    fn exp(self) -> Self {
        libm::exp(self)
    }

    fn ln(self) -> Self {
        libm::log(self)
    }

    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }

    fn sin(self) -> Self {
        libm::sin(self)
    }

    fn cos(self) -> Self {
        libm::cos(self)
    }

    fn tan(self) -> Self {
        libm::tan(self)
    }

    fn atan(self) -> Self {
        libm::atan(self)
    }

    fn atan2(self, other: Self) -> Self {
        libm::atan2(self, other)
    }

    fn powf(self, exponent: f64) -> Self {
        libm::pow(self, exponent)
    }
}

/// First-order dual number `v + ε·d` (ε² = 0) over any [`Scalar`].
///
/// Evaluating a map on `Dual` inputs pushes a tangent direction through it:
/// seed `d` with a direction and the output carries the exact
/// Jacobian-vector product alongside the value. Nesting as
/// `Dual<HyperDual>` yields the directional derivative of a map whose base
/// point is itself being differentiated to second order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    /// Value part.
    pub v: T,
    /// Tangent part (the derivative along the seeded direction).
    pub d: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(v: T, d: T) -> Self {
        Self { v, d }
    }

    pub fn constant(v: T) -> Self {
        Self { v, d: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.v + rhs.v, self.d + rhs.d)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.v - rhs.v, self.d - rhs.d)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.v * rhs.v, self.d * rhs.v + self.v * rhs.d)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.v / rhs.v;
        Self::new(q, (self.d - q * rhs.d) / rhs.v)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(value: f64) -> Self {
        Self::constant(T::from_f64(value))
    }

    fn real(self) -> f64 {
        self.v.real()
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        Self::new(e, self.d * e)
    }

    fn ln(self) -> Self {
        Self::new(self.v.ln(), self.d / self.v)
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Self::new(s, self.d / (s + s))
    }

    fn sin(self) -> Self {
        Self::new(self.v.sin(), self.d * self.v.cos())
    }

    fn cos(self) -> Self {
        Self::new(self.v.cos(), -self.d * self.v.sin())
    }

    fn tan(self) -> Self {
        let t = self.v.tan();
        Self::new(t, self.d * (T::one() + t * t))
    }

    fn atan(self) -> Self {
        Self::new(self.v.atan(), self.d / (T::one() + self.v * self.v))
    }

    fn atan2(self, other: Self) -> Self {
        // d/dt atan2(y, x) = (x y' - y x') / (x^2 + y^2)
        let r2 = self.v * self.v + other.v * other.v;
        Self::new(
            self.v.atan2(other.v),
            (other.v * self.d - self.v * other.d) / r2,
        )
    }

    fn powf(self, exponent: f64) -> Self {
        let c = T::from_f64(exponent);
        Self::new(
            self.v.powf(exponent),
            self.d * c * self.v.powf(exponent - 1.0),
        )
    }
}
