//! Forward-mode differentiation arithmetic.
//!
//! A [`Dual`] carries a value and one tangent channel, `a + a'ε` with
//! `ε² = 0`. The tangent type is itself [`Real`], so `Dual<Dual<f64>>`
//! yields mixed second derivatives, which the bracket engine uses for
//! brackets of brackets and the integrator uses for Hessians.
//!
//! Observables are written once against [`Real`] and evaluated with `f64`
//! for values or `Dual<_>` for exact derivatives.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Scalar field used by every generic evaluator in the crate.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Lift a constant (zero tangent).
    fn cst(x: f64) -> Self;
    /// Primal value.
    fn re(self) -> f64;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    fn sq(self) -> Self {
        self * self
    }

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc *= self;
        }
        acc
    }
}

impl Real for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub value: T,
    pub deriv: T,
}

impl<T: Real> Dual<T> {
    pub fn new(value: T, deriv: T) -> Self {
        Self { value, deriv }
    }

    /// Independent variable: tangent seeded with 1.
    pub fn variable(value: T) -> Self {
        Self {
            value,
            deriv: T::one(),
        }
    }

    pub fn constant(value: T) -> Self {
        Self {
            value,
            deriv: T::zero(),
        }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.deriv * rhs.value + self.value * rhs.deriv,
        )
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = rhs.value.recip();
        let v = self.value * inv;
        Self::new(v, (self.deriv - v * rhs.deriv) * inv)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv)
    }
}

impl<T: Real> AddAssign for Dual<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> SubAssign for Dual<T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: Real> MulAssign for Dual<T> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<T: Real> Real for Dual<T> {
    #[inline]
    fn cst(x: f64) -> Self {
        Self::constant(T::cst(x))
    }

    #[inline]
    fn re(self) -> f64 {
        self.value.re()
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        Self::new(s, self.deriv / (s + s))
    }

    #[inline]
    fn scale(self, k: f64) -> Self {
        Self::new(self.value.scale(k), self.deriv.scale(k))
    }
}
