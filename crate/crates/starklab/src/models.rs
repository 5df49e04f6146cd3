//! Closed-form asymptotic models for `1/r(E)`.
//!
//! * [`fourier_coeff_model`]: leading Fourier coefficient `p(m)`.
//! * [`CubicSum`] / [`regularized_cubic_sum`]: the superexponentially damped
//!   cubic series `P(s)`; [`inverse_r_cubic`] is `a(eps) P(E/eps)`.
//! * [`RationalModel`] / [`rational_model`]: two-scale formula for rational `omega`.
//! * [`omega_zero_model`]: `b(eps) sqrt(z) e^{sqrt z}`, `z = e^{2 pi i E/eps}`.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use serde::Serialize;

use crate::cplx;
use crate::error::{domain, Result, StarkError};
use crate::exp_sums::{sum_table, ExpSumTable};
use crate::report::fmt_real;
use crate::scalar::Real;
use crate::types::{scaled_coords, ModelValue, PrecisionContext, SpectralParams};

const TWO_PI: f64 = std::f64::consts::TAU;

/// `a(eps) = sqrt(2/eps) pi e^{i pi/4}` and `b(eps) = pi^{3/2} e^{i pi/4} / sqrt(2 eps)`.
#[derive(Clone, Debug)]
pub struct PrefactorSet<T> {
    pub a_eps: Complex<T>,
    pub b_eps: Complex<T>,
}

pub fn prefactors<T: Real>(params: &SpectralParams<T>, ctx: &PrecisionContext) -> PrefactorSet<T> {
    let pi = T::pi(ctx);
    let two = T::lift(2.0, ctx);
    let eighth = cplx::expi(&(pi.clone() / T::lift(4.0, ctx)));
    let a = (two.clone() / &params.epsilon).sqrt() * &pi;
    let b = pi.clone() * pi.sqrt() / (two * &params.epsilon).sqrt();
    PrefactorSet {
        a_eps: cplx::scale(&eighth, &a),
        b_eps: cplx::scale(&eighth, &b),
    }
}

/// Integers `m` with `|xi - m/q| <= 1/2`, boundary ties included.
#[derive(Clone, Debug)]
pub struct IndexWindow<T> {
    pub q: u64,
    pub xi: T,
    pub members: Vec<i64>,
}

pub fn index_window<T: Real>(xi: &T, q: u64, ctx: &PrecisionContext) -> IndexWindow<T> {
    let qf = T::lift(q as f64, ctx);
    let half_q = T::lift_ratio(q as i64, 2, ctx);
    let centre = qf * xi;
    let lo = centre.clone() - &half_q;
    let hi = centre.clone() + &half_q;
    // ulp-scale slack so printed ties survive rounding
    let slack = (centre.abs().to_f64() + q as f64) * (8.0 - lo.bits().min(T::MAX_BITS) as f64).exp2();
    let lo_f = lo.to_f64();
    let hi_f = hi.to_f64();
    let mut first = lo_f.ceil() as i64;
    if (lo_f - (first - 1) as f64).abs() <= slack {
        first -= 1;
    }
    let mut last = hi_f.floor() as i64;
    if ((last + 1) as f64 - hi_f).abs() <= slack {
        last += 1;
    }
    IndexWindow {
        q,
        xi: xi.clone(),
        members: (first..=last).collect(),
    }
}

/// `a(eps) sqrt(m) exp(-2 pi i omega m^3 - 2 m log(2 pi m / e))`.
///
/// `est_error` is the residual scale `|value| log^2 m / m`.
pub fn fourier_coeff_model<T: Real>(m: i64, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<ModelValue<T>> {
    if m <= 0 {
        return domain(format!("fourier_coeff_model needs m >= 1, got {m}"));
    }
    let pre = prefactors(params, ctx);
    let c = cubic_coefficient(m, params, ctx);
    let value = cplx::mul(&pre.a_eps, &c);
    let mf = m as f64;
    let scale = mf.ln().powi(2) / mf;
    let est_error = cplx::abs(&value) * T::lift(scale, ctx);
    Ok(ModelValue {
        value,
        truncation_index: Some(m as usize),
        est_error,
    })
}

/// `sqrt(m) exp(-2 pi i omega m^3) (e / (2 pi m))^{2m}`.
fn cubic_coefficient<T: Real>(m: i64, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Complex<T> {
    let pi = T::pi(ctx);
    let mt = T::lift(m as f64, ctx);
    let two_pi = pi.clone() + &pi;
    let ln_mag = mt.ln() / T::lift(2.0, ctx)
        - (mt.clone() + &mt) * ((two_pi.clone() * &mt).ln() - T::one());
    let phase = -(two_pi * params.cubic_phase(m, ctx));
    let mag = ln_mag.exp();
    cplx::scale(&cplx::expi(&phase), &mag)
}

/// `ln |sqrt(m) (e/(2 pi m))^{2m}|`.
fn ln_coeff(m: usize) -> f64 {
    let m = m as f64;
    0.5 * m.ln() - 2.0 * m * ((TWO_PI * m).ln() - 1.0)
}

/// Precision ladder `64, 96, 128, 192, 256, ...`.
fn level_for(bits: u32, max_bits: u32) -> u32 {
    if max_bits < 64 {
        return max_bits;
    }
    let mut lvl = 64u32;
    loop {
        if lvl >= bits {
            return lvl.min(max_bits);
        }
        let mid = lvl + lvl / 2;
        if mid >= bits {
            return mid.min(max_bits);
        }
        lvl *= 2;
    }
}

/// Evaluator for `P(s) = sum_{m>=1} sqrt(m) e^{-2 pi i omega m^3 - 2 m log(2 pi m/e) + 2 pi i m s}`.
///
/// Coefficients are cached per precision level, so repeated evaluation (zero
/// searches) costs one Horner pass at the precision each point needs. The
/// working precision is raised automatically until the result carries the
/// context tolerance despite cancellation between terms.
pub struct CubicSum<T> {
    params: SpectralParams<T>,
    ctx: PrecisionContext,
    fixed_terms: Option<usize>,
    real_coeffs: bool,
    levels: Mutex<BTreeMap<u32, Arc<Vec<Complex<T>>>>>,
    phases: Mutex<Vec<f64>>,
}

impl<T: Real> CubicSum<T> {
    pub fn new(params: &SpectralParams<T>, ctx: &PrecisionContext) -> Self {
        CubicSum {
            params: params.clone(),
            ctx: ctx.clone(),
            fixed_terms: None,
            real_coeffs: matches!(params.rational_tag, Some(t) if t.p == 0),
            levels: Mutex::new(BTreeMap::new()),
            phases: Mutex::new(vec![0.0]),
        }
    }

    /// The partial sum over `m = 1..=n` only.
    pub fn truncated(params: &SpectralParams<T>, ctx: &PrecisionContext, n: usize) -> Self {
        let mut s = Self::new(params, ctx);
        s.fixed_terms = Some(n.max(1));
        s
    }

    pub fn params(&self) -> &SpectralParams<T> {
        &self.params
    }

    /// `{omega m^3}` as doubles, for planning.
    fn phases(&self, n: usize) -> Vec<f64> {
        let mut ph = self.phases.lock().unwrap();
        while ph.len() <= n {
            let m = ph.len() as i64;
            ph.push(self.params.cubic_phase(m, &self.ctx).to_f64());
        }
        ph[..=n].to_vec()
    }

    fn coefficients(&self, level: u32, n: usize) -> Arc<Vec<Complex<T>>> {
        let mut levels = self.levels.lock().unwrap();
        if let Some(v) = levels.get(&level) {
            if v.len() > n {
                return v.clone();
            }
        }
        let have = levels.get(&level).map(|v| v.len()).unwrap_or(1);
        let donor = levels
            .range(level + 1..)
            .find(|(_, v)| v.len() > n)
            .map(|(_, v)| v.clone());
        let mut out: Vec<Complex<T>> = match levels.get(&level) {
            Some(v) => v.as_ref().clone(),
            None => vec![Complex::new(T::zero(), T::zero())],
        };
        let ctx = self.ctx.rebits(level);
        for m in have..=n {
            let c = match &donor {
                Some(d) => cplx::with_bits(d[m].clone(), level),
                None => cubic_coefficient(m as i64, &self.params, &ctx),
            };
            out.push(c);
        }
        let out = Arc::new(out);
        levels.insert(level, out.clone());
        out
    }

    /// `P(s)` for `Im s <= 0`.
    pub fn eval(&self, s: &Complex<T>) -> Result<ModelValue<T>> {
        if s.im > T::zero() {
            return domain("regularized cubic sum needs Im s <= 0");
        }
        let y = -s.im.to_f64();
        let x = s.re.to_f64();
        let x_frac = x - x.floor();
        let ln_term = |m: usize| ln_coeff(m) + TWO_PI * m as f64 * y;

        let mut peak = 1usize;
        while ln_term(peak + 1) > ln_term(peak) {
            peak += 1;
        }
        let l_max = ln_term(peak);
        let tol = self.ctx.tolerance();

        // double-precision pass: cancellation estimate
        let mut n_est = peak;
        while ln_term(n_est + 1) > l_max - 45.0 {
            n_est += 1;
        }
        if let Some(nf) = self.fixed_terms {
            n_est = n_est.min(nf);
        }
        let ph = self.phases(n_est + 1);
        let mut s_est = Complex::new(0.0, 0.0);
        let mut mag = 0.0;
        for m in 1..=n_est {
            let w = (ln_term(m) - l_max).exp();
            let theta = TWO_PI * (m as f64 * x_frac - ph[m]);
            s_est += Complex::from_polar(w, theta);
            mag += w;
        }
        let mut cancel = if s_est.norm() > 1e-9 * mag {
            (l_max - (s_est.norm().ln() + l_max)).max(0.0)
        } else {
            40.0
        };

        // rounding floor of a Horner pass, with headroom for coefficient and `z`
        // rounding growth observed at large `Im s`
        let noise = |level: u32, n: usize| l_max - level as f64 * std::f64::consts::LN_2 + (n as f64).ln() + 20.0;
        let mut floor_bits = self.ctx.mantissa_bits();
        let mut last: Option<(Complex<T>, u32, usize)> = None;
        for _ in 0..40 {
            let need = cancel * std::f64::consts::LOG2_E
                + (1.0 / tol).log2()
                + ((n_est.max(2)) as f64).log2()
                + 40.0;
            let bits = (need.ceil() as u32).max(floor_bits);
            let level = level_for(bits, T::MAX_BITS);
            let ln_s_guess = l_max - cancel;
            let n = match self.fixed_terms {
                Some(nf) => nf,
                None => {
                    let mut n = peak;
                    loop {
                        let step = ln_term(n + 1) - ln_term(n);
                        let tail = ln_term(n + 1) + std::f64::consts::LN_2;
                        if step < -std::f64::consts::LN_2 && tail < ln_s_guess + tol.ln() - 3.0 {
                            break;
                        }
                        n += 1;
                    }
                    n
                }
            };
            let value = self.horner(s, level, n);
            let ln_v = cplx::ln_abs(&value);
            let margin = ln_v - noise(level, n);
            let tail_ok = self.fixed_terms.is_some() || ln_term(n + 1) + std::f64::consts::LN_2 <= ln_v + tol.ln();
            last = Some((value, level, n));
            if level >= T::MAX_BITS || (margin >= -tol.ln() && tail_ok) {
                break;
            }
            if margin < -tol.ln() {
                // value sits at the noise floor of this level
                floor_bits = floor_bits.max(level.saturating_mul(2));
            }
            // a value still dominated by the dropped tail says nothing about the
            // cancellation, so widen geometrically
            let step = if tail_ok { cancel + 8.0 } else { 2.0 * cancel };
            cancel = (l_max - ln_v).max(step);
        }
        let (value, level, n) = last.expect("at least one pass");
        let tail = ln_term(n + 1) + std::f64::consts::LN_2;
        let rounding = noise(level, n);
        let ln_err = if tail > rounding { tail + (1.0 + (rounding - tail).exp()).ln() } else { rounding + (1.0 + (tail - rounding).exp()).ln() };
        let lvl_ctx = self.ctx.rebits(level);
        Ok(ModelValue {
            value,
            truncation_index: Some(n),
            est_error: T::lift(ln_err, &lvl_ctx).exp(),
        })
    }

    fn horner(&self, s: &Complex<T>, level: u32, n: usize) -> Complex<T> {
        let coeffs = self.coefficients(level, n);
        let ctx = self.ctx.rebits(level);
        let two_pi = T::pi(&ctx) * T::lift(2.0, &ctx);
        let s_l = cplx::with_bits(s.clone(), level);
        if self.real_coeffs && (s_l.re.clone() - T::lift(0.5, &ctx)).is_zero() {
            // P(1/2 - i t) = sum c_m (-e^{2 pi t})^m with real c_m
            let z = -(-(two_pi * &s_l.im)).exp();
            let mut acc = coeffs[n].re.clone();
            for m in (1..n).rev() {
                acc = acc * &z + &coeffs[m].re;
            }
            return cplx::real(acc * &z);
        }
        let z = cplx::exp(&Complex::new(-(two_pi.clone() * &s_l.im), two_pi * &s_l.re));
        let mut acc = coeffs[n].clone();
        for m in (1..n).rev() {
            acc = cplx::mul(&acc, &z) + &coeffs[m];
        }
        cplx::mul(&acc, &z)
    }
}

impl<T: Real> CubicSum<T> {
    /// Total change of `arg P(x - i y)` while `x` runs over one period.
    ///
    /// The line is sampled on a uniform grid by one FFT of `c_m e^{2 pi m y}`.
    /// Samples are accurate far above rounding, so a wrapped step below `pi` is
    /// exact; the grid is refined until every step is below `3 pi/4` and two
    /// successive grids give the same number of turns.
    pub fn line_phase(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return domain(format!("line_phase needs y >= 0, got {y}"));
        }
        let ln_term = |m: usize| ln_coeff(m) + TWO_PI * m as f64 * y;
        let mut peak = 1usize;
        while ln_term(peak + 1) > ln_term(peak) {
            peak += 1;
        }
        let l_max = ln_term(peak);
        // assume |P| may cancel all the way down to O(1)
        let want = (l_max * std::f64::consts::LOG2_E + 64.0).ceil() as u32;
        let mut level = level_for(want.max(self.ctx.mantissa_bits()), T::MAX_BITS);
        let dominant = self.fixed_terms.map_or(peak, |n| n.min(peak));
        let mut n = (8 * dominant + 64).next_power_of_two();
        let mut prev: Option<f64> = None;
        let mut raises = 0;
        loop {
            let terms = match self.fixed_terms {
                Some(nf) => nf,
                None => {
                    let floor = l_max - level as f64 * std::f64::consts::LN_2 - 10.0;
                    let mut m = peak;
                    while ln_term(m + 1) > floor || ln_term(m + 1) > ln_term(m) {
                        m += 1;
                    }
                    m
                }
            };
            let vals = self.line_values(y, n, level, terms);
            let noise = l_max - level as f64 * std::f64::consts::LN_2
                + (terms as f64).ln()
                + (n as f64).log2().ln()
                + 20.0;
            let (k_lo, lo) = vals
                .iter()
                .map(cplx::ln_abs)
                .enumerate()
                .fold((0, f64::INFINITY), |a, (k, v)| if v < a.1 { (k, v) } else { a });
            if lo - noise < 8.0 {
                if level >= T::MAX_BITS || raises >= 3 {
                    return Err(StarkError::BoundaryZero {
                        re: k_lo as f64 / n as f64,
                        im: -y,
                    });
                }
                level = level_for(level.saturating_mul(2), T::MAX_BITS);
                raises += 1;
                prev = None;
                continue;
            }
            let args: Vec<f64> = vals.iter().map(|v| cplx::arg(v).to_f64()).collect();
            let mut total = 0.0;
            let mut worst = 0.0f64;
            for k in 0..n {
                let d = args[(k + 1) % n] - args[k];
                let d = d - TWO_PI * (d / TWO_PI).round();
                total += d;
                worst = worst.max(d.abs());
            }
            if worst < 0.75 * std::f64::consts::PI {
                let turns = (total / TWO_PI).round();
                if prev == Some(turns) {
                    return Ok(TWO_PI * turns);
                }
                prev = Some(turns);
            } else {
                prev = None;
            }
            if n >= 1 << 24 {
                return Err(StarkError::Precision(format!("line Im s = {} not resolved on {n} points", -y)));
            }
            n *= 2;
        }
    }

    /// `P(k/n - i y)` for `k = 0..n`.
    fn line_values(&self, y: f64, n: usize, level: u32, terms: usize) -> Vec<Complex<T>> {
        let coeffs = self.coefficients(level, terms);
        let ctx = self.ctx.rebits(level);
        let two_pi = T::pi(&ctx) * T::lift(2.0, &ctx);
        let grow = (two_pi * T::lift(y, &ctx)).exp();
        let zero = Complex::new(T::zero().with_bits(level), T::zero().with_bits(level));
        let mut bins = vec![zero; n];
        let mut zm = grow.clone();
        for m in 1..=terms {
            let b = cplx::scale(&coeffs[m], &zm);
            bins[m % n] = bins[m % n].clone() + b;
            zm = zm * &grow;
        }
        cplx::fft_inverse(&mut bins, &ctx);
        bins
    }
}

pub fn regularized_cubic_sum<T: Real>(s: &Complex<T>, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<ModelValue<T>> {
    CubicSum::new(params, ctx).eval(s)
}

/// `a(eps) P(E/eps)` with a reusable coefficient cache.
pub struct InverseRCubic<T> {
    pub sum: CubicSum<T>,
    a_eps: Complex<T>,
}

impl<T: Real> InverseRCubic<T> {
    pub fn new(params: &SpectralParams<T>, ctx: &PrecisionContext) -> Self {
        InverseRCubic {
            sum: CubicSum::new(params, ctx),
            a_eps: prefactors(params, ctx).a_eps,
        }
    }

    pub fn truncated(params: &SpectralParams<T>, ctx: &PrecisionContext, n: usize) -> Self {
        InverseRCubic {
            sum: CubicSum::truncated(params, ctx, n),
            a_eps: prefactors(params, ctx).a_eps,
        }
    }

    pub fn eval(&self, e: &Complex<T>) -> Result<ModelValue<T>> {
        let eps = &self.sum.params.epsilon;
        let s = Complex::new(e.re.clone() / eps, e.im.clone() / eps);
        let p = self.sum.eval(&s)?;
        let scale = cplx::abs(&self.a_eps);
        Ok(ModelValue {
            value: cplx::mul(&self.a_eps, &p.value),
            truncation_index: p.truncation_index,
            est_error: p.est_error * &scale,
        })
    }
}

pub fn inverse_r_cubic<T: Real>(e: &Complex<T>, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<ModelValue<T>> {
    InverseRCubic::new(params, ctx).eval(e)
}

/// The `rho` that enters [`RationalModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoScale {
    /// `rho = exp(-pi Im E / eps)`.
    Printed,
    /// `rho / pi`: the saddle point of the sum `P` sits at `2 pi m = rho e^{i pi xi}`,
    /// where the summand is `exp(rho e^{i pi xi} / pi)`.
    Saddle,
}

/// Two-scale rational-`omega` model with its exponential-sum table cached.
pub struct RationalModel<T> {
    params: SpectralParams<T>,
    ctx: PrecisionContext,
    table: ExpSumTable<T>,
    b_eps: Complex<T>,
    scale: RhoScale,
}

impl<T: Real> RationalModel<T> {
    pub fn new(params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<Self> {
        let tag = match params.rational_tag {
            Some(t) => t,
            None => return domain("rational_model needs a rational tag (p, q, n)"),
        };
        Ok(RationalModel {
            params: params.clone(),
            ctx: ctx.clone(),
            table: sum_table(tag.q, tag.p, ctx)?,
            b_eps: prefactors(params, ctx).b_eps,
            scale: RhoScale::Printed,
        })
    }

    pub fn with_rho_scale(mut self, scale: RhoScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn rho_scale(&self) -> RhoScale {
        self.scale
    }

    pub fn table(&self) -> &ExpSumTable<T> {
        &self.table
    }

    /// `(b rho / q) sum_{m in I_q(xi)} S_q(p,m) exp(rho e^{i pi (xi - m/q)} + i pi (xi - m/q))`.
    ///
    /// `est_error` is the scale `|value| log^2 rho / rho`.
    pub fn eval(&self, e: &Complex<T>) -> Result<ModelValue<T>> {
        if e.im > T::zero() {
            return domain("rational_model needs Im E <= 0");
        }
        let ctx = &self.ctx;
        let q = self.table.q;
        let mut pt = scaled_coords(e, &self.params, ctx);
        let win = index_window(&pt.xi, q, ctx);
        let pi = T::pi(ctx);
        if self.scale == RhoScale::Saddle {
            pt.rho = pt.rho / &pi;
        }
        let mut sum = Complex::new(T::zero(), T::zero());
        for &m in &win.members {
            let s = self.table.get(m);
            if self.table.is_zero(m) {
                continue;
            }
            let theta = pi.clone() * (pt.xi.clone() - T::lift_ratio(m, q as i64, ctx));
            let arg = cplx::scale(&cplx::expi(&theta), &pt.rho) + Complex::new(T::zero(), theta);
            sum = sum + cplx::mul(s, &cplx::exp(&arg));
        }
        let pre = cplx::scale(&self.b_eps, &(pt.rho.clone() / T::lift(q as f64, ctx)));
        let value = cplx::mul(&pre, &sum);
        let lr = pt.rho.ln();
        let scale = lr.sqr() / &pt.rho;
        let est_error = cplx::abs(&value) * scale;
        Ok(ModelValue {
            value,
            truncation_index: win.members.last().map(|&m| m.unsigned_abs() as usize),
            est_error,
        })
    }
}

pub fn rational_model<T: Real>(e: &Complex<T>, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<ModelValue<T>> {
    RationalModel::new(params, ctx)?.eval(e)
}

/// `b(eps) sqrt(z) e^{sqrt z}` with `z = e^{2 pi i E/eps}` and the principal root.
///
/// On the cut (`xi` in `1/2 + Z`) the root is the limit from `Im z > 0`; the
/// second tuple field reports that case.
pub fn omega_zero_model<T: Real>(
    e: &Complex<T>,
    params: &SpectralParams<T>,
    ctx: &PrecisionContext,
) -> Result<(ModelValue<T>, bool)> {
    if e.im > T::zero() {
        return domain("omega_zero_model needs Im E <= 0");
    }
    let pi = T::pi(ctx);
    let two_pi_over_eps = (pi.clone() + &pi) / &params.epsilon;
    let z = cplx::exp(&Complex::new(
        -(e.im.clone() * &two_pi_over_eps),
        e.re.clone() * &two_pi_over_eps,
    ));
    let az = cplx::abs(&z);
    let on_cut = z.re.is_negative()
        && z.im.abs().to_f64() <= az.to_f64() * (4.0 - z.re.bits().min(T::MAX_BITS) as f64).exp2();
    let z = if on_cut { Complex::new(z.re, T::zero()) } else { z };
    let root = cplx::sqrt(&z);
    let b = prefactors(params, ctx).b_eps;
    let value = cplx::mul(&cplx::mul(&b, &root), &cplx::exp(&root));
    let ln_z = az.ln();
    let est_error = if ln_z.is_zero() {
        T::zero()
    } else {
        cplx::abs(&value) * ln_z.sqr() / az.sqrt()
    };
    Ok((
        ModelValue {
            value,
            truncation_index: None,
            est_error,
        },
        on_cut,
    ))
}

/// One row of a model grid.
#[derive(Clone, Debug)]
pub struct GridRow<T> {
    pub e: Complex<T>,
    pub xi: T,
    pub rho: T,
    pub model_name: String,
    pub value: ModelValue<T>,
}

pub fn write_grid_csv<T: Real, W: Write>(rows: &[GridRow<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "re_E", "im_E", "xi", "rho", "model_name", "re_value", "im_value", "log10_abs", "est_error",
    ])?;
    for r in rows {
        w.write_record([
            fmt_real(&r.e.re),
            fmt_real(&r.e.im),
            fmt_real(&r.xi),
            fmt_real(&r.rho),
            r.model_name.clone(),
            fmt_real(&r.value.value.re),
            fmt_real(&r.value.value.im),
            format!("{:.12}", cplx::ln_abs(&r.value.value) / std::f64::consts::LN_10),
            fmt_real(&r.value.est_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{epsilon_from_omega, make_spectral_params};
    use crate::BigFloat;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn f64ctx() -> PrecisionContext {
        PrecisionContext::new(53, 1e-13).unwrap()
    }

    #[test]
    fn prefactor_identities() {
        let ctx = PrecisionContext::with_bits(128);
        let sp = make_spectral_params(BigFloat::lift(1.3, &ctx), &ctx).unwrap();
        let pre = prefactors(&sp, &ctx);
        let ratio = cplx::to_c64(&(pre.b_eps.clone() / pre.a_eps.clone()));
        assert!((ratio.re - PI.sqrt() / 2.0).abs() < 1e-15 && ratio.im.abs() < 1e-15);
        assert!((cplx::arg(&pre.a_eps).to_f64() - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn windows() {
        let ctx = f64ctx();
        assert_eq!(index_window(&0.4, 3, &ctx).members, vec![0, 1, 2]);
        assert_eq!(index_window(&0.0, 1, &ctx).members, vec![0]);
        assert_eq!(index_window(&0.5, 2, &ctx).members, vec![0, 1, 2]);
        assert_eq!(index_window(&0.5, 1, &ctx).members, vec![0, 1]);
        assert_eq!(index_window(&0.1, 4, &ctx).members, vec![-1, 0, 1, 2]);
    }

    #[test]
    fn fourier_coefficient_values() {
        let ctx = f64ctx();
        // eps and omega as independent knobs
        let sp = SpectralParams { epsilon: 1.0, omega: 0.0, rational_tag: None };
        let p1 = fourier_coeff_model(1, &sp, &ctx).unwrap().value;
        assert!((p1.norm() - 0.831560970858430014).abs() < 1e-14);
        let ph = p1.arg() - FRAC_PI_4;
        assert!(ph.abs() < 1e-12 || (ph.abs() - 2.0 * PI).abs() < 1e-12);
        let sp2 = make_spectral_params(2.0, &ctx).unwrap();
        let p2 = fourier_coeff_model(2, &sp2, &ctx).unwrap().value;
        assert!((p2.norm() - 0.00972754709442175788).abs() < 1e-16);
        let half = epsilon_from_omega::<f64>(1, 2, 0, &ctx).unwrap();
        let p = fourier_coeff_model(1, &half, &ctx).unwrap().value;
        let d = (p.arg() - (FRAC_PI_4 - PI)).rem_euclid(2.0 * PI);
        assert!(d < 1e-12 || 2.0 * PI - d < 1e-12);
        assert!(fourier_coeff_model(0, &sp, &ctx).is_err());
    }

    #[test]
    fn cubic_sum_values() {
        let ctx = f64ctx();
        let zero = epsilon_from_omega::<f64>(0, 1, 1, &ctx).unwrap();
        let half = epsilon_from_omega::<f64>(1, 2, 0, &ctx).unwrap();
        let third = epsilon_from_omega::<f64>(1, 3, 0, &ctx).unwrap();
        let p = |s: Complex<f64>, sp: &SpectralParams<f64>| regularized_cubic_sum(&s, sp, &ctx).unwrap().value;
        let v = p(Complex::new(0.0, 0.0), &zero);
        assert!((v.re - 0.19027896772397232).abs() < 1e-15 && v.im.abs() < 1e-15);
        let v = p(Complex::new(0.0, 0.0), &half);
        assert!((v.re + 0.18408614400431676).abs() < 1e-15);
        let v = p(Complex::new(0.3, -0.7), &zero);
        assert!((v - Complex::new(-14.164776920019884, -0.93652728979667339)).norm() < 1e-12);
        let v = p(Complex::new(0.3, -0.7), &third);
        assert!((v - Complex::new(41.552450383292469, -17.803662142079080)).norm() < 1e-12);
        assert!(regularized_cubic_sum(&Complex::new(0.0, 0.1), &zero, &ctx).is_err());
    }

    #[test]
    fn cubic_sum_deep_cancellation() {
        // s = 1/2 - 2.5 i: about 820 nats of cancellation between terms
        let ctx = PrecisionContext::new(128, 1e-25).unwrap();
        let zero = epsilon_from_omega::<BigFloat>(0, 1, 1, &ctx).unwrap();
        let s = cplx::c::<BigFloat>(0.5, -2.5, &ctx);
        let v = regularized_cubic_sum(&s, &zero, &ctx).unwrap();
        let want = BigFloat(rug::Float::with_val(256, rug::Float::parse("1.464869043542553163537763").unwrap()));
        let rel = ((v.value.re.clone() - want.clone()) / want).abs().to_f64();
        assert!(rel < 1e-22, "{rel:e}");
        let s = cplx::c::<BigFloat>(0.37, -2.5, &ctx);
        let v = regularized_cubic_sum(&s, &zero, &ctx).unwrap().value;
        let parse = |t: &str| BigFloat(rug::Float::with_val(256, rug::Float::parse(t).unwrap()));
        let want = Complex::new(parse("1.848701846323560249508689e144"), parse("-5.733402443483372046773158e143"));
        let rel = cplx::abs(&(v - want.clone())) / cplx::abs(&want);
        assert!(rel.to_f64() < 1e-22, "{rel}");
        let s = cplx::c::<BigFloat>(0.5, -2.0, &ctx);
        let v = regularized_cubic_sum(&s, &zero, &ctx).unwrap().value;
        assert!((v.re.to_f64() + 218.07367016426948760).abs() < 1e-12);
    }

    #[test]
    fn dominant_term_near_four() {
        let terms: Vec<f64> = (1..12).map(|m| ln_coeff(m) + TWO_PI * m as f64).collect();
        let best = terms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
            + 1;
        assert_eq!(best, 4);
    }

    #[test]
    fn omega_zero_values() {
        let ctx = f64ctx();
        let sp = make_spectral_params(1.0, &ctx).unwrap();
        let (v, cut) = omega_zero_model(&Complex::new(0.0, 0.0), &sp, &ctx).unwrap();
        assert!(!cut);
        assert!((v.value.norm() - 10.702969630193776).abs() < 1e-12);
        assert!((v.value.arg() - FRAC_PI_4).abs() < 1e-14);
        let (v, _) = omega_zero_model(&Complex::new(0.0, -1.0), &sp, &ctx).unwrap();
        let want = prefactors(&sp, &ctx).b_eps * (PI.exp() * PI.exp().exp());
        assert!(((v.value - want) / want).norm() < 1e-12);
        let (_, cut) = omega_zero_model(&Complex::new(0.5, -0.3), &sp, &ctx).unwrap();
        assert!(cut);
    }

    #[test]
    fn rational_q1_is_omega_zero() {
        let ctx = f64ctx();
        let sp = epsilon_from_omega::<f64>(0, 1, 1, &ctx).unwrap();
        let rm = RationalModel::new(&sp, &ctx).unwrap();
        let e = Complex::new(0.21 * sp.epsilon, -0.8 * sp.epsilon);
        let a = rm.eval(&e).unwrap().value;
        let (b, _) = omega_zero_model(&e, &sp, &ctx).unwrap();
        assert!(((a - b.value) / a).norm() < 1e-12);
    }

    #[test]
    fn rational_q2_single_interior_term() {
        let ctx = f64ctx();
        let sp = epsilon_from_omega::<f64>(1, 2, 0, &ctx).unwrap();
        let rm = RationalModel::new(&sp, &ctx).unwrap();
        let e = Complex::new(0.5 * sp.epsilon, -0.9 * sp.epsilon);
        let v = rm.eval(&e).unwrap().value;
        // only m = 1 survives: (b rho / 2) * 2 * exp(rho + 0)
        let rho = (0.9 * PI).exp();
        let want = prefactors(&sp, &ctx).b_eps * (rho * rho.exp());
        assert!(((v - want) / want).norm() < 1e-12);
    }

    #[test]
    fn models_are_periodic() {
        let ctx = f64ctx();
        let sp = epsilon_from_omega::<f64>(1, 4, 0, &ctx).unwrap();
        let eps = sp.epsilon;
        let rm = RationalModel::new(&sp, &ctx).unwrap();
        let ic = InverseRCubic::new(&sp, &ctx);
        for k in 0..5 {
            let e = Complex::new(0.13 * k as f64 * eps, -(0.2 + 0.25 * k as f64) * eps);
            let e1 = e + eps;
            let (a, b) = (rm.eval(&e).unwrap().value, rm.eval(&e1).unwrap().value);
            assert!(((a - b) / a).norm() < 1e-12);
            let (a, b) = (ic.eval(&e).unwrap().value, ic.eval(&e1).unwrap().value);
            assert!(((a - b) / a).norm() < 1e-12);
        }
    }

    #[test]
    fn cubic_is_its_fourier_series() {
        let ctx = f64ctx();
        let sp = make_spectral_params(1.7, &ctx).unwrap();
        let e = Complex::new(0.3, -0.4);
        let n = 30;
        let v = InverseRCubic::truncated(&sp, &ctx, n).eval(&e).unwrap().value;
        let mut sum = Complex::new(0.0, 0.0);
        for m in 1..=n as i64 {
            let pm = fourier_coeff_model(m, &sp, &ctx).unwrap().value;
            sum += pm * (Complex::new(0.0, TWO_PI * m as f64) * e / sp.epsilon).exp();
        }
        assert!(((v - sum) / sum).norm() < 1e-14);
    }
}
