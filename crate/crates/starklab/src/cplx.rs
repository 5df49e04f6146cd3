//! Elementary complex functions over any [`Real`].
//!
//! `num_complex` only offers these for `num_traits::Float`, which an
//! arbitrary-precision type cannot implement.

use num_complex::Complex;

use crate::scalar::Real;
use crate::types::PrecisionContext;

pub fn c<T: Real>(re: f64, im: f64, ctx: &PrecisionContext) -> Complex<T> {
    Complex::new(T::lift(re, ctx), T::lift(im, ctx))
}

pub fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

pub fn to_c64<T: Real>(z: &Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn abs<T: Real>(z: &Complex<T>) -> T {
    z.re.hypot(&z.im)
}

pub fn arg<T: Real>(z: &Complex<T>) -> T {
    z.im.atan2(&z.re)
}

/// `ln|z|` as a double, finite for magnitudes beyond the f64 range.
pub fn ln_abs<T: Real>(z: &Complex<T>) -> f64 {
    let a = z.re.ln_abs();
    let b = z.im.ln_abs();
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + 0.5 * (2.0 * (lo - hi)).exp().ln_1p()
}

pub fn scale<T: Real>(z: &Complex<T>, s: &T) -> Complex<T> {
    Complex::new(z.re.clone() * s, z.im.clone() * s)
}

pub fn exp<T: Real>(z: &Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    let (s, c) = z.im.sin_cos();
    Complex::new(c * &m, s * &m)
}

/// `e^{i theta}` for real `theta`.
pub fn expi<T: Real>(theta: &T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// Principal logarithm, `Im ln z` in `(-pi, pi]`.
pub fn ln<T: Real>(z: &Complex<T>) -> Complex<T> {
    Complex::new(abs(z).ln(), arg(z))
}

/// Principal square root, continuous from above on the negative axis
/// (a signed zero imaginary part counts as the upper side).
pub fn sqrt<T: Real>(z: &Complex<T>) -> Complex<T> {
    if z.re.is_zero() && z.im.is_zero() {
        return z.clone();
    }
    let two = T::one() + T::one();
    let r = abs(z);
    if !z.re.is_negative() {
        let t = ((r + &z.re) / &two).sqrt();
        let im = z.im.clone() / (t.clone() * &two);
        Complex::new(t, im)
    } else {
        let t = ((r - &z.re) / &two).sqrt();
        let re = z.im.abs() / (t.clone() * &two);
        let im = if z.im.is_negative() { -t } else { t };
        Complex::new(re, im)
    }
}

/// `z^p` on the principal branch.
pub fn powr<T: Real>(z: &Complex<T>, p: &T) -> Complex<T> {
    exp(&scale(&ln(z), p))
}

/// `acc += a * b`.
#[inline]
pub fn mul_acc<T: Real>(acc: &mut Complex<T>, a: &Complex<T>, b: &Complex<T>) {
    acc.re.mul_add_assign(&a.re, &b.re);
    acc.re.mul_sub_assign(&a.im, &b.im);
    acc.im.mul_add_assign(&a.re, &b.im);
    acc.im.mul_add_assign(&a.im, &b.re);
}

pub fn mul<T: Real>(a: &Complex<T>, b: &Complex<T>) -> Complex<T> {
    let mut re = a.re.clone() * &b.re;
    re.mul_sub_assign(&a.im, &b.im);
    let mut im = a.re.clone() * &b.im;
    im.mul_add_assign(&a.im, &b.re);
    Complex::new(re, im)
}

pub fn with_bits<T: Real>(z: Complex<T>, bits: u32) -> Complex<T> {
    Complex::new(z.re.with_bits(bits), z.im.with_bits(bits))
}

/// In place `a_k <- sum_j a_j e^{2 pi i j k / n}`, `n` a power of two.
pub fn fft_inverse<T: Real>(a: &mut [Complex<T>], ctx: &PrecisionContext) {
    let n = a.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    if n < 2 {
        return;
    }
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let two_pi = T::pi(ctx) * T::lift(2.0, ctx);
    let nf = T::lift(n as f64, ctx);
    let roots: Vec<Complex<T>> = (0..n / 2)
        .map(|k| expi(&(two_pi.clone() * T::lift(k as f64, ctx) / &nf)))
        .collect();
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let t = mul(&a[start + k + len / 2], &roots[k * stride]);
                let u = a[start + k].clone();
                a[start + k] = u.clone() + &t;
                a[start + k + len / 2] = u - t;
            }
        }
        len <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BigFloat;

    #[test]
    fn fft_matches_direct_sum() {
        let ctx = PrecisionContext::new(53, 1e-12).unwrap();
        let a: Vec<Complex<f64>> = (0..8).map(|k| Complex::new(k as f64 * 0.5 - 1.0, (k * k) as f64 * 0.1)).collect();
        let mut b = a.clone();
        fft_inverse(&mut b, &ctx);
        for k in 0..8 {
            let direct: Complex<f64> = (0..8)
                .map(|j| a[j] * Complex::from_polar(1.0, std::f64::consts::TAU * (j * k) as f64 / 8.0))
                .sum();
            assert!((direct - b[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn sqrt_branch() {
        let ctx = PrecisionContext::f64();
        let s = sqrt(&c::<f64>(-4.0, 0.0, &ctx));
        assert!((s.re).abs() < 1e-15 && (s.im - 2.0).abs() < 1e-15);
        let s = sqrt(&c::<f64>(-4.0, -0.0, &ctx));
        assert!((s.im - 2.0).abs() < 1e-15);
        let s = sqrt(&c::<f64>(-4.0, -1e-300, &ctx));
        assert!((s.im + 2.0).abs() < 1e-15);
        let s = sqrt(&c::<f64>(3.0, 4.0, &ctx));
        assert!((s.re - 2.0).abs() < 1e-15 && (s.im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn big_matches_double() {
        let ctx = PrecisionContext::with_bits(160);
        let z = c::<BigFloat>(-0.3, 1.7, &ctx);
        let w = c::<f64>(-0.3, 1.7, &ctx);
        let d = to_c64(&exp(&ln(&sqrt(&z)))) - sqrt(&w);
        assert!(d.norm() < 1e-15);
        let e = to_c64(&powr(&z, &BigFloat::lift(1.5, &ctx))) - w.powf(1.5);
        assert!(e.norm() < 1e-14);
        assert!((ln_abs(&z) - w.norm().ln()).abs() < 1e-15);
    }
}
