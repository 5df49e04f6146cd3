//! Reference solver for the reflection coefficient by direct integration.
//!
//! `psi_-` starts from its WKB form deep in the classically forbidden region
//! and is integrated to the right, where any admixture of the other solution
//! dies out. `psi_+` and `psi_+^*` come from the large-argument expansion at a
//! far-right point `x_R` with local wavenumber `k_R = pi (n_R + 1/2)`, between
//! two Bragg resonances. Reflections from gaps beyond `x_R` are not seen; their
//! size, which sets the part of `1/r` carried by Fourier modes `m > n_R`, is
//! reported separately as `truncation_error`.

pub mod asymptotic;
pub mod fourier;
pub mod potential;
pub mod taylor;

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use serde::Serialize;

use crate::cplx;
use crate::error::{domain, Result, StarkError};
use crate::report::fmt_real;
use crate::scalar::Real;
use crate::types::{epsilon_from_omega, ModelValue, PrecisionContext, SpectralParams};

pub use asymptotic::BoundarySeries;
pub use fourier::{fourier_coeff_numeric, write_fourier_csv, FourierRow};
pub use potential::PotentialSpec;
pub use taylor::{State, StepStats, Stepper};

/// Overrides for the automatically chosen integration window.
#[derive(Clone, Debug, Serialize)]
pub struct OracleConfig {
    /// Bragg index `n_R` of the right matching point (`k_R = pi (n_R + 1/2)`).
    pub bragg_index: Option<u32>,
    /// Upper bound on the automatically chosen `n_R`.
    pub max_bragg_index: u32,
    /// `sqrt(-eps x_L - Re E)` at the left starting point.
    pub kappa_left: Option<f64>,
    /// Raise the working precision until rounding is below the tolerance.
    pub adaptive: bool,
    pub max_bits: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            bragg_index: None,
            max_bragg_index: 12,
            kappa_left: None,
            adaptive: true,
            max_bits: 1 << 16,
        }
    }
}

/// Connection data at one energy.
#[derive(Clone, Debug)]
pub struct ScatteringResult<T> {
    pub e: Complex<T>,
    pub r: Complex<T>,
    pub inv_r: Complex<T>,
    /// `W(psi_-, psi_+) = 2 i w`, in the normalization of `psi_-` used.
    pub w: Complex<T>,
    pub w_star: Complex<T>,
    /// Computed `W(psi_+^*, psi_+)`; `2i` up to the boundary accuracy.
    pub wronskian_plus: Complex<T>,
    /// Relative error of `1/r` from rounding and boundary data.
    pub rel_error: f64,
    /// Absolute size of the omitted Bragg contributions to `1/r`.
    pub truncation_error: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub bragg_index: u32,
    pub mantissa_bits: u32,
    pub steps: usize,
}

impl<T: Real> ScatteringResult<T> {
    /// Absolute error estimate of `r`.
    pub fn est_error(&self) -> f64 {
        let r = cplx::to_c64(&self.r).norm();
        self.rel_error * r + self.truncation_error * r * r
    }

    /// Absolute error estimate of `1/r`.
    pub fn est_error_inv(&self) -> f64 {
        self.rel_error * cplx::to_c64(&self.inv_r).norm() + self.truncation_error
    }
}

type SeriesKey = (u32, usize, usize);

/// Solver for one field strength and potential; caches the boundary series.
pub struct StarkOracle<T> {
    pub potential: PotentialSpec,
    pub params: SpectralParams<T>,
    pub config: OracleConfig,
    cache: Mutex<HashMap<SeriesKey, Arc<BoundarySeries<T>>>>,
}

#[derive(Clone, Copy, Debug)]
struct Window {
    bragg_index: u32,
    x_left: f64,
    x_right: f64,
    harmonics: usize,
    orders: usize,
    /// `ln` of the omitted Bragg contributions.
    ln_truncation: f64,
}

/// `ln` of the `n`-th Bragg gap width for amplitude `a` (Mathieu estimate).
pub fn ln_gap(n: u32, a: f64) -> f64 {
    let n = n as f64;
    let mut lf = 0.0;
    for i in 2..(n as u32) {
        lf += (i as f64).ln();
    }
    2f64.ln() + n * (a / (std::f64::consts::PI * std::f64::consts::PI)).ln() - (n - 1.0) * 4f64.ln() - 2.0 * lf
}

impl<T: Real> StarkOracle<T> {
    pub fn new(potential: PotentialSpec, params: SpectralParams<T>) -> Self {
        Self::with_config(potential, params, OracleConfig::default())
    }

    pub fn with_config(potential: PotentialSpec, params: SpectralParams<T>, config: OracleConfig) -> Self {
        StarkOracle {
            potential,
            params,
            config,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn eps_at(&self, ctx: &PrecisionContext) -> T {
        match self.params.rational_tag {
            Some(t) => epsilon_from_omega::<T>(t.p, t.q, t.n, ctx)
                .map(|p| p.epsilon)
                .unwrap_or_else(|_| self.params.epsilon.clone()),
            None => self.params.epsilon.clone(),
        }
    }

    fn window(&self, e: Complex<f64>, eps: f64, tol: f64) -> Window {
        let pot = &self.potential;
        let a = pot.max_amplitude();
        let pi = std::f64::consts::PI;
        let d = (-e.im / eps).max(0.0);
        // Bragg contribution of gap n at depth d, and its largest value
        let contrib = |n: u32| ln_gap(n, a) + 2.0 * pi * n as f64 * d;
        let peak = (1..400).map(contrib).fold(0.0f64, f64::max);
        let n_auto = || {
            let mut n = 2u32;
            while n < 400 && ((n + 1)..(n + 40)).any(|m| contrib(m) > tol.ln() - 6.0 + peak) {
                n += 1;
            }
            n.min(self.config.max_bragg_index)
        };
        let n_r = if pot.is_zero() { 3 } else { self.config.bragg_index.unwrap_or_else(n_auto) };
        let kh = pot.max_harmonic().max(1) as f64;
        let k_right = pi * kh * (n_r as f64 + 0.5);
        let ln_truncation = if pot.is_zero() {
            f64::NEG_INFINITY
        } else {
            let mut acc = f64::NEG_INFINITY;
            for m in (n_r + 1)..(n_r + 400) {
                let c = contrib(m);
                acc = if acc > c { acc + (c - acc).exp().ln_1p() } else { c + (acc - c).exp().ln_1p() };
            }
            acc
        };
        let kappa_left = self.config.kappa_left.unwrap_or_else(|| {
            let need = (0.75 * eps * (-tol.ln() + 12.0 + peak)).cbrt();
            need.max((4.0 * a + 4.0).sqrt())
        });
        let (harmonics, orders) = asymptotic::series_size(pot, k_right);
        Window {
            bragg_index: n_r,
            x_left: -(kappa_left * kappa_left + e.re) / eps,
            x_right: (k_right * k_right - e.re) / eps,
            harmonics,
            orders,
            ln_truncation,
        }
    }

    fn series(&self, eps: &T, w: &Window, ctx: &PrecisionContext) -> Arc<BoundarySeries<T>> {
        let key = (ctx.mantissa_bits(), w.harmonics, w.orders);
        if let Some(s) = self.cache.lock().expect("cache lock").get(&key) {
            return s.clone();
        }
        let s = Arc::new(BoundarySeries::new(&self.potential, eps, w.harmonics, w.orders, ctx));
        self.cache.lock().expect("cache lock").insert(key, s.clone());
        s
    }

    /// `r(E)` with adaptive precision starting from `ctx`.
    pub fn connection_coeffs(&self, e: &Complex<T>, ctx: &PrecisionContext) -> Result<ScatteringResult<T>> {
        if e.im > T::zero() {
            return domain(format!("Im E = {} > 0", e.im));
        }
        if !e.re.is_finite() || !e.im.is_finite() {
            return domain("non-finite energy");
        }
        let mut bits = ctx.mantissa_bits();
        loop {
            let c = ctx.rebits(bits);
            let res = self.solve_once(e, &c)?;
            if !self.config.adaptive || T::MAX_BITS <= 53 {
                return Ok(res.0);
            }
            let (out, round_rel) = res;
            let target = 0.01 * ctx.tolerance();
            if round_rel <= target {
                return Ok(out);
            }
            let extra = ((round_rel / target).log2().ceil() as u32).max(16) + 16;
            let next = bits + extra;
            if next > self.config.max_bits.min(T::MAX_BITS) {
                return Err(StarkError::Precision(format!(
                    "oracle needs about {next} bits at E = ({}, {}), budget {}",
                    e.re.to_f64(),
                    e.im.to_f64(),
                    self.config.max_bits
                )));
            }
            bits = next;
        }
    }

    /// One solve at fixed precision; also returns the rounding part of the error.
    fn solve_once(&self, e: &Complex<T>, ctx: &PrecisionContext) -> Result<(ScatteringResult<T>, f64)> {
        let eps = self.eps_at(ctx);
        let eps_f = eps.to_f64();
        let e = cplx::with_bits(e.clone(), ctx.mantissa_bits().max(e.re.bits()));
        let e64 = cplx::to_c64(&e);
        let w = self.window(e64, eps_f, ctx.tolerance());
        let series = self.series(&eps, &w, ctx);
        let stepper = Stepper::for_precision(&self.potential, ctx);
        let mut stats = StepStats::default();

        let lift = |x: f64| T::lift(x, ctx);
        let xr = Complex::new(lift(w.x_right), T::zero());
        let xl = Complex::new(lift(w.x_left), T::zero());

        // psi_+^* at x_R from the conjugate problem
        let k_conj = cplx::sqrt(&(cplx::scale(&xr, &eps) + e.conj()));
        let bstar = series.eval(&xr, &k_conj, 0.0, ctx);
        let pstar = State {
            psi: bstar.state.psi.conj(),
            dpsi: bstar.state.dpsi.conj(),
            log2_scale: bstar.state.log2_scale,
        };

        let k_r = cplx::sqrt(&(cplx::scale(&xr, &eps) + e.clone()));
        let bplus = series.eval(&xr, &k_r, 0.0, ctx);
        let pplus = bplus.state.clone();

        let mut pminus = minus_start(&e, &eps, &xl, ctx);

        // rounding estimate: projections of per-step errors on both solutions
        let mut ln_sw = f64::NEG_INFINITY;
        let mut ln_sws = f64::NEG_INFINITY;
        let bits = ctx.mantissa_bits();
        {
            let observe = |x: &Complex<T>, st: &State<T>| {
                let xf = x.re.to_f64();
                let (mp, ms, lk) = wkb_ln_magnitudes(xf, e64, eps_f);
                let lm = st.ln_abs();
                ln_sw = ln_sw.max(lm + ms + lk);
                ln_sws = ln_sws.max(lm + mp + lk);
            };
            stepper.run_observed(&eps, &e, &xl, &xr, &mut pminus, &mut stats, ctx, observe);
        }

        let (wp, sp) = taylor::wronskian(&pstar, &pplus);
        let (wm, sm) = taylor::wronskian(&pminus, &pplus);
        let (wms, sms) = taylor::wronskian(&pminus, &pstar);
        let wronskian_plus = scale2(wp, sp);
        let two_i = Complex::new(T::zero(), lift(2.0));
        let norm_dev = cplx::to_c64(&(wronskian_plus.clone() - two_i)).norm();
        if !(norm_dev <= 1e3 * ctx.tolerance()) {
            let z = cplx::to_c64(&wronskian_plus);
            return Err(StarkError::Normalization { re: z.re, im: z.im });
        }
        // 1/r = w / w^*, W(psi_-, psi_+) = 2 i w, W(psi_-, psi_+^*) = -2 i w^*
        let common = sm.min(sms);
        let wm_c = scale2(wm, sm - common);
        let wms_c = scale2(wms, sms - common);
        let inv_two_i = Complex::new(T::zero(), lift(-0.5));
        let w_val = cplx::mul(&wm_c, &inv_two_i);
        let w_star = cplx::mul(&wms_c, &Complex::new(T::zero(), lift(0.5)));
        let inv_r = w_val.clone() / w_star.clone();
        let r = w_star.clone() / w_val.clone();

        // error budget
        let ln2f = std::f64::consts::LN_2;
        let ln_w = cplx::ln_abs(&wm_c) + common as f64 * ln2f;
        let ln_ws = cplx::ln_abs(&wms_c) + common as f64 * ln2f;
        let ln_u = -(bits as f64) * ln2f + 0.5 * (stats.steps.max(1) as f64).ln() + (stepper.order as f64).ln();
        let round_rel = (ln_u + ln_sw - ln_w).exp() + (ln_u + ln_sws - ln_ws).exp();
        // a residual admixture of the other solution in psi_- at x_L
        let kl = (-(eps_f * w.x_left) - e64).sqrt();
        let ln_contam = -(4.0 / (3.0 * eps_f)) * (kl * kl * kl).re + (eps_f / kl.norm().powi(3)).ln();
        let lr = cplx::ln_abs(&inv_r).abs();
        let contam = (ln_contam + lr).exp();
        let rel_error = round_rel + contam + bplus.rel_error + bstar.rel_error;
        // data error of psi_+ seen as a multiple of psi_+^*: absolute on 1/r
        let (mp_r, ms_r, _) = wkb_ln_magnitudes(w.x_right, e64, eps_f);
        let ln_mix = bplus.rel_error.max(1e-300).ln() + mp_r - ms_r;
        let truncation_error = w.ln_truncation.exp() + ln_mix.exp();

        Ok((
            ScatteringResult {
                e,
                r,
                inv_r,
                w: w_val,
                w_star,
                wronskian_plus,
                rel_error,
                truncation_error,
                x_left: w.x_left,
                x_right: w.x_right,
                bragg_index: w.bragg_index,
                mantissa_bits: bits,
                steps: stats.steps,
            },
            round_rel,
        ))
    }

    /// `1/r(E)` with its absolute error estimate.
    pub fn inverse_r(&self, e: &Complex<T>, ctx: &PrecisionContext) -> Result<ModelValue<T>> {
        let s = self.connection_coeffs(e, ctx)?;
        let abs = s.est_error_inv();
        Ok(ModelValue {
            value: s.inv_r,
            truncation_index: None,
            est_error: T::lift(abs, ctx),
        })
    }

    /// `psi_+` carried from the boundary data to the real point `x`.
    pub fn psi_plus(&self, e: &Complex<T>, x: &T, ctx: &PrecisionContext) -> Result<State<T>> {
        let eps = self.eps_at(ctx);
        let w = self.window(cplx::to_c64(e), eps.to_f64(), ctx.tolerance());
        let series = self.series(&eps, &w, ctx);
        let stepper = Stepper::for_precision(&self.potential, ctx);
        let xr = Complex::new(T::lift(w.x_right, ctx), T::zero());
        let k = cplx::sqrt(&(cplx::scale(&xr, &eps) + e.clone()));
        let mut st = series.eval(&xr, &k, 0.0, ctx).state;
        let mut stats = StepStats::default();
        stepper.run(&eps, e, &xr, &Complex::new(x.clone(), T::zero()), &mut st, &mut stats, ctx);
        Ok(st)
    }

    /// `psi_-` from its WKB start at `x_L` to the real point `x`.
    pub fn psi_minus(&self, e: &Complex<T>, x: &T, ctx: &PrecisionContext) -> Result<State<T>> {
        let eps = self.eps_at(ctx);
        let w = self.window(cplx::to_c64(e), eps.to_f64(), ctx.tolerance());
        let xl = Complex::new(T::lift(w.x_left, ctx), T::zero());
        let mut st = minus_start(e, &eps, &xl, ctx);
        let stepper = Stepper::for_precision(&self.potential, ctx);
        let mut stats = StepStats::default();
        stepper.run(&eps, e, &xl, &Complex::new(x.clone(), T::zero()), &mut st, &mut stats, ctx);
        Ok(st)
    }
}

/// WKB data `kappa^{-1/2} e^{-(2/(3 eps)) kappa^3}` of the recessive solution at `x`.
fn minus_start<T: Real>(e: &Complex<T>, eps: &T, x: &Complex<T>, ctx: &PrecisionContext) -> State<T> {
    let lift = |v: f64| T::lift(v, ctx);
    let kap = cplx::sqrt(&(-(cplx::scale(x, eps) + e.clone())));
    let kap3 = cplx::mul(&cplx::mul(&kap, &kap), &kap);
    let expo = cplx::scale(&kap3, &(-(lift(2.0) / (lift(3.0) * eps))));
    let s0 = (expo.re.to_f64() / std::f64::consts::LN_2).round() as i64;
    let psi = cplx::mul(
        &cplx::powr(&kap, &lift(-0.5)),
        &cplx::exp(&Complex::new(expo.re.clone() - lift(2.0).ln() * lift(s0 as f64), expo.im.clone())),
    );
    // psi'/psi = kappa + eps/(4 kappa^2)
    let corr = cplx::real(eps.clone() / lift(4.0)) / cplx::mul(&kap, &kap);
    let dpsi = cplx::mul(&psi, &(kap + corr));
    State { psi, dpsi, log2_scale: s0 }
}

fn scale2<T: Real>(z: Complex<T>, s: i64) -> Complex<T> {
    let s = s.clamp(i32::MIN as i64, i32::MAX as i64) as i32;
    Complex::new(z.re.ldexp(s), z.im.ldexp(s))
}

/// WKB estimates of `ln|psi_+|`, `ln|psi_+^*|` and `ln|k|` at real `x`.
fn wkb_ln_magnitudes(x: f64, e: Complex<f64>, eps: f64) -> (f64, f64, f64) {
    let floor = eps.cbrt();
    let z = eps * x + e;
    let lk = z.norm().sqrt().max(floor).ln();
    if z.re < 0.0 {
        // forbidden side: both grow towards the left
        let kap = (-z).sqrt();
        let g = (2.0 / (3.0 * eps)) * (kap * kap * kap).re.abs();
        return (g - 0.5 * lk, g - 0.5 * lk, lk);
    }
    let k = z.sqrt();
    let ks = z.conj().sqrt();
    let phi = |k: Complex<f64>| (2.0 / (3.0 * eps)) * (k * k * k);
    (-phi(k).im - 0.5 * lk, -phi(ks).im - 0.5 * lk, lk)
}

/// `1/r(E)` for the standard potential `2 cos(2 pi x)`.
pub fn inverse_r_oracle<T: Real>(e: &Complex<T>, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<ModelValue<T>> {
    StarkOracle::new(PotentialSpec::default(), params.clone()).inverse_r(e, ctx)
}

/// One row of the oracle CSV.
pub fn write_oracle_csv<T: Real, W: Write>(rows: &[ScatteringResult<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["re_E", "im_E", "re_r", "im_r", "abs_r", "est_error", "x_L", "x_R", "mantissa_bits"])?;
    for r in rows {
        let bits = r.mantissa_bits;
        w.write_record([
            fmt_real(&r.e.re),
            fmt_real(&r.e.im),
            fmt_real(&r.r.re),
            fmt_real(&r.r.im),
            fmt_real(&cplx::abs(&r.r)),
            format!("{:.3e}", r.est_error()),
            format!("{}", r.x_left),
            format!("{}", r.x_right),
            bits.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
