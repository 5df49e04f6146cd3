//! Large-argument expansion of the Buslaev solutions, used as boundary data.
//!
//! `psi'/psi = i k + sum_j G_j(k) e^{2 pi i j x}` with `k^2 = eps x + E` and
//! each `G_j` a formal series in `1/k`. The coefficients depend only on
//! `eps` and `v`, so they are computed once.

use num_complex::Complex;

use super::potential::PotentialSpec;
use super::taylor::State;
use crate::cplx;
use crate::scalar::Real;
use crate::types::PrecisionContext;

#[derive(Debug)]
pub struct BoundarySeries<T> {
    pub harmonics: usize,
    pub orders: usize,
    eps: T,
    /// `g[j + J][n]`: coefficient of `k^{-n}` in `G_j`.
    g: Vec<Vec<Complex<T>>>,
    /// Coefficients of `k^{-n}` in the oscillating part of `ln psi`.
    m: Vec<Vec<Complex<T>>>,
    /// `n0[p]`: coefficient of `k^{2-p}` in the mean part of `ln psi`.
    n0: Vec<Complex<T>>,
}

/// Value of a boundary solution with a relative error estimate.
#[derive(Clone, Debug)]
pub struct BoundaryValue<T> {
    pub state: State<T>,
    pub rel_error: f64,
}

impl<T: Real> BoundarySeries<T> {
    pub fn new(pot: &PotentialSpec, eps: &T, harmonics: usize, orders: usize, ctx: &PrecisionContext) -> Self {
        let jj = harmonics as i64;
        let width = 2 * harmonics + 1;
        let zero = Complex::new(T::zero(), T::zero());
        let mut g = vec![vec![zero.clone(); orders + 1]; width];
        let two_pi = T::pi(ctx) * T::lift(2.0, ctx);
        let half_eps = eps.clone() / T::lift(2.0, ctx);
        let vj: Vec<T> = (-jj..=jj).map(|j| T::lift(pot.fourier(j), ctx)).collect();
        for n in 0..orders {
            for j in -jj..=jj {
                let ji = (j + jj) as usize;
                let mut r = zero.clone();
                if n == 0 {
                    r.re = vj[ji].clone();
                }
                if n == 1 && j == 0 {
                    r.im = -half_eps.clone();
                }
                if n >= 3 {
                    let f = half_eps.clone() * T::lift((n - 2) as f64, ctx);
                    r = r + cplx::scale(&g[ji][n - 2], &f);
                }
                let lo = (j - jj).max(-jj);
                let hi = (j + jj).min(jj);
                let mut s = zero.clone();
                for l in lo..=hi {
                    let (gl, gr) = (&g[(l + jj) as usize], &g[(j - l + jj) as usize]);
                    for a in 1..n {
                        cplx::mul_acc(&mut s, &gl[a], &gr[n - a]);
                    }
                }
                r = r - s;
                // r - 2 pi i j g_n
                let w = two_pi.clone() * T::lift(j as f64, ctx);
                let gn = &g[ji][n];
                r = r + Complex::new(gn.im.clone() * &w, -(gn.re.clone() * &w));
                // divide by 2i
                let half = T::lift(0.5, ctx);
                g[ji][n + 1] = Complex::new(r.im.clone() * &half, -(r.re.clone() * &half));
            }
        }

        // mean part: H_0 = G_0 + (eps/4) k^{-2}
        let mut n0 = vec![zero.clone(); orders + 1];
        let two_over_eps = T::lift(2.0, ctx) / eps.clone();
        for p in 3..=orders {
            let f = -(two_over_eps.clone() / T::lift((p - 2) as f64, ctx));
            n0[p] = cplx::scale(&g[harmonics][p], &f);
        }

        // oscillating part: sum_n (-D)^n H_j / (i w)^{n+1}, with -D k^{-p} = (p eps/2) k^{-p-2}
        let mut m = vec![vec![zero.clone(); orders + 1]; width];
        for j in -jj..=jj {
            if j == 0 {
                continue;
            }
            let ji = (j + jj) as usize;
            let w = two_pi.clone() * T::lift(j as f64, ctx);
            // 1/(i w) = -i/w
            let inv_iw = Complex::new(T::zero(), -(T::one() / w));
            let mut t = g[ji].clone();
            let mut f = inv_iw.clone();
            loop {
                let mut any = false;
                for p in 0..=orders {
                    if !t[p].re.is_zero() || !t[p].im.is_zero() {
                        any = true;
                        m[ji][p] = m[ji][p].clone() + cplx::mul(&t[p], &f);
                    }
                }
                if !any {
                    break;
                }
                let mut next = vec![zero.clone(); orders + 1];
                for p in 1..=orders.saturating_sub(2) {
                    next[p + 2] = cplx::scale(&t[p], &(half_eps.clone() * T::lift(p as f64, ctx)));
                }
                t = next;
                f = cplx::mul(&f, &inv_iw);
            }
        }
        BoundarySeries {
            harmonics,
            orders,
            eps: eps.clone(),
            g,
            m,
            n0,
        }
    }

    /// Boundary solution at `x` on the branch `k` (`k^2 = eps x + E`).
    ///
    /// `twist` multiplies the solution by a unimodular constant `e^{i twist}`.
    pub fn eval(&self, x: &Complex<T>, k: &Complex<T>, twist: f64, ctx: &PrecisionContext) -> BoundaryValue<T> {
        let jj = self.harmonics as i64;
        let kinv = Complex::new(T::one(), T::zero()) / k.clone();
        let ln_kinv = cplx::ln_abs(&kinv);
        let mut pw = Vec::with_capacity(self.orders + 1);
        pw.push(Complex::new(T::one(), T::zero()));
        for n in 1..=self.orders {
            pw.push(cplx::mul(&pw[n - 1], &kinv));
        }
        let two_pi = T::pi(ctx) * T::lift(2.0, ctx);
        let e1 = cplx::exp(&Complex::new(-(x.im.clone() * &two_pi), x.re.clone() * &two_pi));
        let e1inv = Complex::new(T::one(), T::zero()) / e1.clone();
        let mut ej = vec![Complex::new(T::one(), T::zero()); 2 * self.harmonics + 1];
        for j in 1..=jj {
            let up = (jj + j) as usize;
            let dn = (jj - j) as usize;
            ej[up] = cplx::mul(&ej[up - 1], &e1);
            ej[dn] = cplx::mul(&ej[dn + 1], &e1inv);
        }

        // sum up to the smallest term, which is also the error estimate
        let trunc = |c: &[Complex<T>], shift: usize| {
            let mut best = (0usize, f64::INFINITY);
            for n in 1..=self.orders {
                let lc = cplx::ln_abs(&c[n]);
                if lc == f64::NEG_INFINITY {
                    continue;
                }
                let lt = lc + (n as f64 - shift as f64) * ln_kinv;
                if lt <= best.1 {
                    best = (n, lt);
                }
            }
            let mut s = Complex::new(T::zero(), T::zero());
            for n in 1..=best.0 {
                if c[n].re.is_zero() && c[n].im.is_zero() {
                    continue;
                }
                let mut term = cplx::mul(&c[n], &pw[n.saturating_sub(shift)]);
                for _ in n..shift {
                    term = cplx::mul(&term, k);
                }
                s = s + term;
            }
            let smallest = if best.0 == 0 { f64::NEG_INFINITY } else { best.1 };
            (s, smallest)
        };

        let mut y = Complex::new(-k.im.clone(), k.re.clone());
        let mut lnpsi = cplx::ln(k);
        lnpsi = cplx::scale(&lnpsi, &T::lift(-0.5, ctx));
        let k3 = cplx::mul(&cplx::mul(k, k), k);
        let phi = cplx::scale(&k3, &(T::lift(2.0, ctx) / (T::lift(3.0, ctx) * &self.eps)));
        lnpsi = lnpsi + Complex::new(-phi.im, phi.re + T::lift(twist, ctx));
        let mut err = f64::NEG_INFINITY;
        let lnk = -ln_kinv;
        let add_err = |err: &mut f64, v: f64| {
            *err = if *err > v { *err + (v - *err).exp().ln_1p() } else { v + (*err - v).exp().ln_1p() };
        };
        let (s0, e0) = trunc(&self.n0, 2);
        lnpsi = lnpsi + s0;
        add_err(&mut err, e0);
        let mut lg = vec![f64::NEG_INFINITY; 2 * self.harmonics + 1];
        for j in -jj..=jj {
            let ji = (j + jj) as usize;
            let lej = cplx::ln_abs(&ej[ji]);
            let (gj, eg) = trunc(&self.g[ji], 0);
            lg[ji] = cplx::ln_abs(&gj) + lej;
            y = y + cplx::mul(&gj, &ej[ji]);
            // error in psi'/psi relative to |k|
            add_err(&mut err, eg + lej - lnk);
            if j != 0 {
                let (mj, em) = trunc(&self.m[ji], 0);
                lnpsi = lnpsi + cplx::mul(&mj, &ej[ji]);
                add_err(&mut err, em + lej);
            }
        }
        let lr = lnpsi.re.to_f64();
        let s = (lr / std::f64::consts::LN_2).round() as i64;
        if jj >= 2 {
            // geometric extrapolation past the outermost harmonics
            let w = 2 * self.harmonics;
            for (a, b) in [(0usize, 1usize), (w, w - 1)] {
                let (la, lb) = (lg[a], lg[b]);
                if la.is_finite() && lb.is_finite() {
                    add_err(&mut err, la + (la - lb).min(0.0) - lnk);
                }
            }
        }
        let ln2 = T::lift(2.0, ctx).ln();
        let shifted = Complex::new(lnpsi.re.clone() - ln2 * T::lift(s as f64, ctx), lnpsi.im.clone());
        let psi = cplx::exp(&shifted);
        let dpsi = cplx::mul(&psi, &y);
        BoundaryValue {
            state: State { psi, dpsi, log2_scale: s },
            rel_error: err.exp(),
        }
    }
}

/// Harmonic and order counts for boundary data at wavenumbers near `k`:
/// every harmonic up to the nearest Bragg resonance, plus a margin.
pub fn series_size(pot: &PotentialSpec, k: f64) -> (usize, usize) {
    if pot.is_zero() {
        return (0, 60);
    }
    let kh = pot.max_harmonic().max(1) as f64;
    let j = (k / std::f64::consts::PI).ceil() as usize + 2;
    (j * kh as usize, 160)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_series_is_airy_like() {
        // v = 0: G_0 = -eps/(4 k^2) + ...; Wronskian of psi and its conjugate partner is 2i
        let ctx = PrecisionContext::f64();
        let pot = PotentialSpec::zero();
        let bs = BoundarySeries::new(&pot, &1.0f64, 0, 30, &ctx);
        assert!((bs.g[0][2].re + 0.25).abs() < 1e-15);
        let x = Complex::new(30.0, 0.0);
        let e = Complex::new(0.5, 0.0);
        let k = (x + e).sqrt();
        let a = bs.eval(&x, &k, 0.0, &ctx).state;
        let b = bs.eval(&x, &k, 0.0, &ctx).state;
        let w = a.psi.conj() * b.dpsi - a.dpsi.conj() * b.psi;
        let w = w * ((a.log2_scale + b.log2_scale) as f64).exp2();
        assert!((w - Complex::new(0.0, 2.0)).norm() < 1e-12, "{w}");
    }

    #[test]
    fn series_solves_the_equation() {
        // compare psi'' from finite differences with (v - eps x - E) psi
        let ctx = PrecisionContext::f64();
        let pot = PotentialSpec::default();
        let eps = 0.8;
        let (j, p) = series_size(&pot, 20.0);
        let bs = BoundarySeries::new(&pot, &eps, j, p, &ctx);
        let e = Complex::new(0.3, -0.4);
        let f = |x: f64| {
            let xc = Complex::new(x, 0.0);
            let k = (xc * eps + e).sqrt();
            let b = bs.eval(&xc, &k, 0.0, &ctx);
            assert!(b.rel_error < 1e-12, "{}", b.rel_error);
            (b.state.psi * (b.state.log2_scale as f64).exp2(), b.state.dpsi * (b.state.log2_scale as f64).exp2())
        };
        let x0 = 520.0;
        let h = 1e-4;
        let (p0, d0) = f(x0);
        let (_, dp) = f(x0 + h);
        let (_, dm) = f(x0 - h);
        let second = (dp - dm) / (2.0 * h);
        let q = 2.0 * (std::f64::consts::TAU * x0).cos() - eps * x0 - e;
        let rel = (second - q * p0).norm() / (q * p0).norm();
        assert!(rel < 1e-6, "{rel}");
        let (pp, _) = f(x0 + h);
        let (pm, _) = f(x0 - h);
        assert!(((pp - pm) / (2.0 * h) - d0).norm() / d0.norm() < 1e-6);
    }
}
