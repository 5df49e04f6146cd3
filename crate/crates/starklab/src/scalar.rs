//! Scalar abstraction shared by the double-precision and MPFR-backed code paths.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::Num;

use crate::types::PrecisionContext;

/// Real scalar used throughout the crate.
///
/// Values built with [`Real::lift`] carry the precision of the supplied
/// context; binary operations on mixed precisions promote to the wider one.
pub trait Real:
    Num
    + Clone
    + Debug
    + Display
    + PartialOrd
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + Send
    + Sync
    + 'static
{
    /// Largest mantissa this type can carry.
    const MAX_BITS: u32;

    fn lift(x: f64, ctx: &PrecisionContext) -> Self;
    fn lift_ratio(num: i64, den: i64, ctx: &PrecisionContext) -> Self;
    fn pi(ctx: &PrecisionContext) -> Self;
    fn to_f64(&self) -> f64;
    /// Mantissa bits actually stored.
    fn bits(&self) -> u32;
    /// Re-round to `bits` (no-op for fixed-width types).
    fn with_bits(self, bits: u32) -> Self;

    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    fn atan2(&self, x: &Self) -> Self;
    fn abs(&self) -> Self;
    fn floor(&self) -> Self;
    fn hypot(&self, other: &Self) -> Self;
    /// `ln|x|` as a double, finite even when `x` itself would overflow one.
    fn ln_abs(&self) -> f64;
    /// `x * 2^k`.
    fn ldexp(self, k: i32) -> Self;
    fn is_finite(&self) -> bool;
    /// `self += a * b` without an intermediate allocation where possible.
    fn mul_add_assign(&mut self, a: &Self, b: &Self);
    /// `self -= a * b`.
    fn mul_sub_assign(&mut self, a: &Self, b: &Self);

    fn sin(&self) -> Self {
        self.sin_cos().0
    }
    fn cos(&self) -> Self {
        self.sin_cos().1
    }
    fn sqr(&self) -> Self {
        self.clone() * self
    }
    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    const MAX_BITS: u32 = 53;

    fn lift(x: f64, _: &PrecisionContext) -> Self {
        x
    }
    fn lift_ratio(num: i64, den: i64, _: &PrecisionContext) -> Self {
        num as f64 / den as f64
    }
    fn pi(_: &PrecisionContext) -> Self {
        std::f64::consts::PI
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn bits(&self) -> u32 {
        53
    }
    fn with_bits(self, _: u32) -> Self {
        self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
    fn ln_abs(&self) -> f64 {
        f64::abs(*self).ln()
    }
    fn ldexp(self, k: i32) -> Self {
        self * 2f64.powi(k)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn mul_sub_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
}
