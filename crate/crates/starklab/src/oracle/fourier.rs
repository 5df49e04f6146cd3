//! Fourier coefficients of `1/r` by the periodic trapezoid rule on `Im E = -eta eps`.

use std::io::Write;

use num_complex::Complex;

use super::StarkOracle;
use crate::cplx;
use crate::error::{domain, Result};
use crate::par::par_map;
use crate::report::{fmt_real, log10_abs};
use crate::scalar::Real;
use crate::types::{ModelValue, PrecisionContext};

#[derive(Clone, Debug)]
pub struct FourierRow<T> {
    pub m: i64,
    pub eta: f64,
    pub p: ModelValue<T>,
}

/// Samples of `1/r(eps (t - i eta))` at `t = k/nodes`, with their absolute errors.
pub fn contour_samples<T: Real>(
    oracle: &StarkOracle<T>,
    eta: f64,
    nodes: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<(Complex<T>, f64)>> {
    if !(eta > 0.0) {
        return domain(format!("eta = {eta} must be positive"));
    }
    if nodes < 2 || !nodes.is_power_of_two() {
        return domain(format!("nodes = {nodes} must be a power of two >= 2"));
    }
    let eps = oracle.params.epsilon.clone();
    let ts: Vec<usize> = (0..nodes).collect();
    let out = par_map(&ts, |&k| {
        let t = T::lift_ratio(k as i64, nodes as i64, ctx);
        let e = Complex::new(t * &eps, -(T::lift(eta, ctx) * &eps));
        oracle.connection_coeffs(&e, ctx).map(|s| {
            let err = s.rel_error * cplx::to_c64(&s.inv_r).norm();
            (s.inv_r, err)
        })
    });
    out.into_iter().collect()
}

/// `p(m)` for each `m` from one set of samples; the error is the difference to
/// the half-node rule plus the propagated sample error.
pub fn coeffs_from_samples<T: Real>(
    samples: &[(Complex<T>, f64)],
    ms: &[i64],
    eta: f64,
    ctx: &PrecisionContext,
) -> Vec<ModelValue<T>> {
    let n = samples.len();
    let two_pi = T::pi(ctx) * T::lift(2.0, ctx);
    let sample_err = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    ms.iter()
        .map(|&m| {
            let mut full = Complex::new(T::zero(), T::zero());
            let mut half = Complex::new(T::zero(), T::zero());
            for (k, (f, _)) in samples.iter().enumerate() {
                let theta = -(two_pi.clone() * T::lift_ratio(m * k as i64 % n as i64, n as i64, ctx));
                let term = cplx::mul(f, &cplx::expi(&theta));
                if k % 2 == 0 {
                    half = half + term.clone();
                }
                full = full + term;
            }
            let damp = (-(two_pi.clone() * T::lift(m as f64 * eta, ctx))).exp();
            let inv_n = T::one() / T::lift(n as f64, ctx);
            let full = cplx::scale(&full, &(inv_n.clone() * &damp));
            let half = cplx::scale(&half, &(inv_n * T::lift(2.0, ctx) * &damp));
            let diff = cplx::to_c64(&(full.clone() - half)).norm();
            let prop = sample_err * damp.to_f64();
            ModelValue {
                value: full,
                truncation_index: Some(n),
                est_error: T::lift(diff + prop, ctx),
            }
        })
        .collect()
}

/// `p(m) = int_0^1 (1/r)(eps (t - i eta)) e^{-2 pi i m t} dt e^{-2 pi m eta}`.
pub fn fourier_coeff_numeric<T: Real>(
    m: i64,
    oracle: &StarkOracle<T>,
    eta: f64,
    nodes: usize,
    ctx: &PrecisionContext,
) -> Result<ModelValue<T>> {
    let s = contour_samples(oracle, eta, nodes, ctx)?;
    Ok(coeffs_from_samples(&s, &[m], eta, ctx).remove(0))
}

pub fn write_fourier_csv<T: Real, W: Write>(rows: &[FourierRow<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "eta", "re_p", "im_p", "log10_abs_p", "est_error"])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.eta.to_string(),
            fmt_real(&r.p.value.re),
            fmt_real(&r.p.value.im),
            format!("{:.6}", log10_abs(&cplx::abs(&r.p.value))),
            format!("{:.3e}", r.p.est_error.to_f64()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
