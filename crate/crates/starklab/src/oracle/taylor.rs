//! Taylor-series integration of `psi'' = (v(x) - eps x - E) psi` along straight
//! segments of the complex plane.

use num_complex::Complex;

use super::potential::PotentialSpec;
use crate::cplx;
use crate::scalar::Real;
use crate::types::PrecisionContext;

/// `(psi, psi')` scaled by `2^log2_scale`.
#[derive(Clone, Debug)]
pub struct State<T> {
    pub psi: Complex<T>,
    pub dpsi: Complex<T>,
    pub log2_scale: i64,
}

impl<T: Real> State<T> {
    pub fn new(psi: Complex<T>, dpsi: Complex<T>) -> Self {
        let mut s = State { psi, dpsi, log2_scale: 0 };
        s.renormalize();
        s
    }

    /// `ln |psi|` including the scale.
    pub fn ln_abs(&self) -> f64 {
        cplx::ln_abs(&self.psi) + self.log2_scale as f64 * std::f64::consts::LN_2
    }

    fn renormalize(&mut self) {
        let l = cplx::ln_abs(&self.psi).max(cplx::ln_abs(&self.dpsi));
        if !l.is_finite() {
            return;
        }
        let k = (l / std::f64::consts::LN_2).round() as i64;
        if k.abs() > 64 {
            let shift = -k as i32;
            self.psi = Complex::new(self.psi.re.clone().ldexp(shift), self.psi.im.clone().ldexp(shift));
            self.dpsi = Complex::new(self.dpsi.re.clone().ldexp(shift), self.dpsi.im.clone().ldexp(shift));
            self.log2_scale += k;
        }
    }
}

/// Wronskian `f g' - f' g` as (mantissa, log2 scale).
pub fn wronskian<T: Real>(f: &State<T>, g: &State<T>) -> (Complex<T>, i64) {
    let mut w = cplx::mul(&f.psi, &g.dpsi);
    let t = cplx::mul(&f.dpsi, &g.psi);
    w = w - t;
    (w, f.log2_scale + g.log2_scale)
}

/// Integration settings; `order` and the local tolerance follow the precision.
#[derive(Clone, Debug)]
pub struct Stepper<'a> {
    pub potential: &'a PotentialSpec,
    pub order: usize,
    pub local_tol_ln: f64,
}

#[derive(Clone, Debug, Default)]
pub struct StepStats {
    pub steps: usize,
}

impl<'a> Stepper<'a> {
    pub fn for_precision(potential: &'a PotentialSpec, ctx: &PrecisionContext) -> Self {
        let bits = ctx.mantissa_bits() as f64;
        let ln_tol = (bits - 4.0) * std::f64::consts::LN_2;
        Stepper {
            potential,
            order: (ln_tol * 0.9).clamp(20.0, 400.0) as usize,
            local_tol_ln: -ln_tol,
        }
    }

    /// Integrate from `from` to `to` in place.
    #[allow(clippy::too_many_arguments)]
    pub fn run<T: Real>(
        &self,
        eps: &T,
        e: &Complex<T>,
        from: &Complex<T>,
        to: &Complex<T>,
        state: &mut State<T>,
        stats: &mut StepStats,
        ctx: &PrecisionContext,
    ) {
        self.run_observed(eps, e, from, to, state, stats, ctx, |_, _| {});
    }

    /// As [`Stepper::run`], calling `observe` with each accepted node and state.
    #[allow(clippy::too_many_arguments)]
    pub fn run_observed<T: Real>(
        &self,
        eps: &T,
        e: &Complex<T>,
        from: &Complex<T>,
        to: &Complex<T>,
        state: &mut State<T>,
        stats: &mut StepStats,
        ctx: &PrecisionContext,
        mut observe: impl FnMut(&Complex<T>, &State<T>),
    ) {
        let n = self.order;
        let total = to.clone() - from.clone();
        let len = cplx::abs(&total).to_f64();
        if len == 0.0 {
            return;
        }
        let unit = cplx::scale(&total, &(T::one() / T::lift(len, ctx)));
        let mut done = 0.0f64;
        let mut x0 = from.clone();
        let mut a: Vec<Complex<T>> = Vec::with_capacity(n + 1);
        let inv: Vec<T> = (0..=n)
            .map(|i| T::one() / T::lift(((i + 2) * (i + 1)) as f64, ctx))
            .collect();
        while done < len {
            let mut q = self.potential.taylor(&x0, n, ctx);
            q[0] = q[0].clone() - cplx::scale(&x0, eps) - e.clone();
            q[1] = q[1].clone() - cplx::real(eps.clone());
            a.clear();
            a.push(state.psi.clone());
            a.push(state.dpsi.clone());
            for m in 0..n.saturating_sub(1) {
                let mut s = Complex::new(T::zero(), T::zero());
                for i in 0..=m {
                    cplx::mul_acc(&mut s, &q[i], &a[m - i]);
                }
                a.push(cplx::scale(&s, &inv[m]));
            }
            // step from the decay of the two highest coefficients
            let wave = cplx::ln_abs(&q[0]).mul_add(0.5, 0.0).exp().max(1.0);
            let base = cplx::ln_abs(&a[0]).max(cplx::ln_abs(&a[1]) - wave.ln());
            let mut ln_h = f64::INFINITY;
            for m in [n - 1, n] {
                let lm = cplx::ln_abs(&a[m]);
                if lm.is_finite() {
                    ln_h = ln_h.min((self.local_tol_ln + base - lm) / m as f64);
                }
            }
            let h = (0.9 * ln_h.exp()).min(len - done);
            let last = len - done - h < 1e-12 * len;
            let dx = if last { to.clone() - x0.clone() } else { cplx::scale(&unit, &T::lift(h, ctx)) };
            let mut p = a[n].clone();
            let mut dp = cplx::scale(&a[n], &T::lift(n as f64, ctx));
            for m in (0..n).rev() {
                p = cplx::mul(&p, &dx) + a[m].clone();
                if m >= 1 {
                    dp = cplx::mul(&dp, &dx) + cplx::scale(&a[m], &T::lift(m as f64, ctx));
                }
            }
            state.psi = p;
            state.dpsi = dp;
            state.renormalize();
            stats.steps += 1;
            x0 = if last { to.clone() } else { x0 + dx };
            observe(&x0, state);
            done = if last { len } else { done + h };
        }
    }
}
