//! MPFR-backed [`Real`] implementation.
//!
//! Results of binary operations carry the wider of the two operand
//! precisions, so constants built at 53 bits never truncate a working value.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Num, One, Zero};
use rug::Float;

use crate::scalar::Real;
use crate::types::PrecisionContext;

#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct BigFloat(pub Float);

impl BigFloat {
    pub fn with_bits_f64(x: f64, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, x))
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }

    #[inline]
    fn widen(&mut self, prec: u32) {
        if self.0.prec() < prec {
            self.0.set_prec(prec);
        }
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr<BigFloat> for BigFloat {
            type Output = BigFloat;
            #[inline]
            fn $m(mut self, rhs: BigFloat) -> BigFloat {
                self.widen(rhs.0.prec());
                $atr::$am(&mut self.0, &rhs.0);
                self
            }
        }
        impl<'a> $tr<&'a BigFloat> for BigFloat {
            type Output = BigFloat;
            #[inline]
            fn $m(mut self, rhs: &'a BigFloat) -> BigFloat {
                self.widen(rhs.0.prec());
                $atr::$am(&mut self.0, &rhs.0);
                self
            }
        }
        impl<'a> $tr<&'a BigFloat> for &'a BigFloat {
            type Output = BigFloat;
            #[inline]
            fn $m(self, rhs: &'a BigFloat) -> BigFloat {
                self.clone().$m(rhs)
            }
        }
        impl $atr<BigFloat> for BigFloat {
            #[inline]
            fn $am(&mut self, rhs: BigFloat) {
                self.widen(rhs.0.prec());
                $atr::$am(&mut self.0, &rhs.0);
            }
        }
        impl<'a> $atr<&'a BigFloat> for BigFloat {
            #[inline]
            fn $am(&mut self, rhs: &'a BigFloat) {
                self.widen(rhs.0.prec());
                $atr::$am(&mut self.0, &rhs.0);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);
binop!(Div, div, DivAssign, div_assign);

impl Rem for BigFloat {
    type Output = BigFloat;
    fn rem(mut self, rhs: BigFloat) -> BigFloat {
        self.widen(rhs.0.prec());
        self.0 %= &rhs.0;
        self
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat(-self.0)
    }
}

impl Zero for BigFloat {
    fn zero() -> Self {
        BigFloat(Float::new(2))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for BigFloat {
    fn one() -> Self {
        BigFloat(Float::with_val(2, 1))
    }
}

impl Num for BigFloat {
    type FromStrRadixErr = rug::float::ParseFloatError;
    fn from_str_radix(src: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(src, radix as i32)?;
        let bits = (src.len() as u32 * 4).max(64);
        Ok(BigFloat(Float::with_val(bits, parsed)))
    }
}

impl Real for BigFloat {
    const MAX_BITS: u32 = 1 << 24;

    fn lift(x: f64, ctx: &PrecisionContext) -> Self {
        BigFloat(Float::with_val(ctx.mantissa_bits(), x))
    }
    fn lift_ratio(num: i64, den: i64, ctx: &PrecisionContext) -> Self {
        BigFloat(Float::with_val(ctx.mantissa_bits(), num) / den)
    }
    fn pi(ctx: &PrecisionContext) -> Self {
        BigFloat(ctx.pi_mpfr().clone())
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn bits(&self) -> u32 {
        self.0.prec()
    }
    fn with_bits(mut self, bits: u32) -> Self {
        self.0.set_prec(bits);
        self
    }
    fn sqrt(&self) -> Self {
        BigFloat(self.0.clone().sqrt())
    }
    fn exp(&self) -> Self {
        BigFloat(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        BigFloat(self.0.clone().ln())
    }
    fn sin_cos(&self) -> (Self, Self) {
        let mut s = self.0.clone();
        let mut c = Float::new(self.0.prec());
        s.sin_cos_mut(&mut c);
        (BigFloat(s), BigFloat(c))
    }
    fn atan2(&self, x: &Self) -> Self {
        let prec = self.0.prec().max(x.0.prec());
        let mut y = self.0.clone();
        if y.prec() < prec {
            y.set_prec(prec);
        }
        BigFloat(y.atan2(&x.0))
    }
    fn abs(&self) -> Self {
        BigFloat(self.0.clone().abs())
    }
    fn floor(&self) -> Self {
        BigFloat(self.0.clone().floor())
    }
    fn hypot(&self, other: &Self) -> Self {
        let mut y = self.clone();
        y.widen(other.0.prec());
        BigFloat(y.0.hypot(&other.0))
    }
    fn ln_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (m, e) = self.0.to_f64_exp();
        m.abs().ln() + e as f64 * std::f64::consts::LN_2
    }
    fn ldexp(mut self, k: i32) -> Self {
        self.0 <<= k;
        self
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        self.widen(a.0.prec().max(b.0.prec()));
        self.0 += &a.0 * &b.0;
    }
    fn mul_sub_assign(&mut self, a: &Self, b: &Self) {
        self.widen(a.0.prec().max(b.0.prec()));
        self.0 -= &a.0 * &b.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_precision_promotes() {
        let ctx = PrecisionContext::with_bits(200);
        let third = BigFloat::lift_ratio(1, 3, &ctx);
        let two = BigFloat::with_bits_f64(2.0, 53);
        let x = two * &third;
        assert_eq!(x.bits(), 200);
        let err = (x - BigFloat::lift_ratio(2, 3, &ctx)).abs();
        assert!(err.ln_abs() < -130.0);
    }

    #[test]
    fn zero_one_widen_on_accumulate() {
        let ctx = PrecisionContext::with_bits(300);
        let mut acc = BigFloat::zero();
        acc += BigFloat::pi(&ctx);
        assert_eq!(acc.bits(), 300);
        let mut fma = BigFloat::one();
        fma.mul_add_assign(&BigFloat::pi(&ctx), &BigFloat::pi(&ctx));
        assert_eq!(fma.bits(), 300);
    }

    #[test]
    fn ln_abs_survives_huge_exponents() {
        let ctx = PrecisionContext::with_bits(128);
        let big = BigFloat::lift(5000.0, &ctx).exp();
        assert!(!big.to_f64().is_finite());
        assert!((big.ln_abs() - 5000.0).abs() < 1e-9);
    }
}
