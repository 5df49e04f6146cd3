//! Oracle against model: residual reports for the Fourier law and for the
//! rational-`omega` formula, normalized by their theoretical error scales.

use num_complex::Complex;
use serde::Serialize;

use crate::cplx;
use crate::error::{domain, Result};
use crate::models::{fourier_coeff_model, InverseRCubic, RationalModel, RhoScale};
use crate::oracle::{fourier, OracleConfig, PotentialSpec, StarkOracle};
use crate::par::par_map;
use crate::scalar::Real;
use crate::types::{PrecisionContext, SpectralParams};
use crate::C64;

/// Largest normalized residual either comparison accepts.
pub const NORMALIZED_BOUND: f64 = 10.0;

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierPoint {
    pub m: i64,
    pub p_numeric: C64,
    pub numeric_error: f64,
    pub p_model: C64,
    /// `log p_numeric - log p_model`, principal branch.
    pub log_ratio: C64,
    /// `|log_ratio| m / log^2 m`.
    pub normalized: f64,
    /// The same with `Re log_ratio` only.
    pub normalized_abs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierComparison {
    pub eps: f64,
    pub eta: f64,
    pub nodes: usize,
    pub points: Vec<FourierPoint>,
    /// Slope of `normalized` against `m`.
    pub slope: f64,
    pub max_normalized: f64,
    /// `slope <= 0` and `max_normalized <= NORMALIZED_BOUND`.
    pub pass: bool,
}

/// Fourier comparison from contour samples already taken at `eta`.
pub fn compare_fourier_samples<T: Real>(
    params: &SpectralParams<T>,
    samples: &[(Complex<T>, f64)],
    eta: f64,
    ms: &[i64],
    ctx: &PrecisionContext,
) -> Result<FourierComparison> {
    if ms.is_empty() || ms.iter().any(|&m| m < 2) {
        return domain("the Fourier comparison needs m >= 2");
    }
    let nums = fourier::coeffs_from_samples(samples, ms, eta, ctx);
    let mut points = Vec::with_capacity(ms.len());
    for (&m, num) in ms.iter().zip(nums) {
        let model = fourier_coeff_model(m, params, ctx)?;
        let ratio = num.value.clone() / model.value.clone();
        let log_ratio = Complex::new(cplx::ln_abs(&ratio), cplx::to_c64(&ratio).arg());
        let lm = (m as f64).ln();
        let w = m as f64 / (lm * lm);
        points.push(FourierPoint {
            m,
            p_numeric: cplx::to_c64(&num.value),
            numeric_error: num.est_error.to_f64(),
            p_model: cplx::to_c64(&model.value),
            log_ratio,
            normalized: log_ratio.norm() * w,
            normalized_abs: log_ratio.re.abs() * w,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.m as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.normalized).collect();
    let slope = ls_slope(&xs, &ys);
    let max_normalized = ys.iter().cloned().fold(0.0, f64::max);
    Ok(FourierComparison {
        eps: params.epsilon.to_f64(),
        eta,
        nodes: samples.len(),
        points,
        slope,
        max_normalized,
        pass: slope <= 0.0 && max_normalized <= NORMALIZED_BOUND,
    })
}

/// `p(m)` from `nodes` oracle samples on `Im E = -eta eps` against the Fourier law.
pub fn compare_fourier<T: Real>(
    params: &SpectralParams<T>,
    eta: f64,
    nodes: usize,
    ms: &[i64],
    ctx: &PrecisionContext,
) -> Result<FourierComparison> {
    let oracle = StarkOracle::new(PotentialSpec::default(), params.clone());
    let samples = fourier::contour_samples(&oracle, eta, nodes, ctx)?;
    compare_fourier_samples(params, &samples, eta, ms, ctx)
}

#[derive(Clone, Debug, Serialize)]
pub struct RationalCompareConfig {
    /// `-Im E / eps` of each rung.
    pub depths: Vec<f64>,
    /// `Re E / eps` sampled on every rung.
    pub xis: Vec<f64>,
    pub oracle: OracleConfig,
}

impl Default for RationalCompareConfig {
    fn default() -> Self {
        RationalCompareConfig {
            depths: vec![1.0, 1.1, 1.2],
            xis: vec![0.3, 0.55],
            oracle: OracleConfig {
                max_bragg_index: 60,
                ..OracleConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RationalPoint {
    pub depth: f64,
    pub xi: f64,
    pub rho: f64,
    pub ln_abs_oracle: f64,
    pub oracle_rel_error: f64,
    /// `|oracle - model| / |model|`.
    pub raw: f64,
    /// `raw / (log^2 rho / rho)`.
    pub normalized: f64,
    /// `raw` against `i model`.
    pub phase_aligned: f64,
    /// `raw` for the model with `rho / pi`.
    pub saddle_raw: f64,
    pub saddle_phase_aligned: f64,
    /// `raw` for `a(eps) P(E/eps)`.
    pub cubic_raw: f64,
    pub cubic_phase_aligned: f64,
}

/// Maxima over `xi` on one rung.
#[derive(Clone, Debug, Serialize)]
pub struct DepthRow {
    pub depth: f64,
    pub raw: f64,
    pub normalized: f64,
    pub phase_aligned: f64,
    pub saddle_phase_aligned: f64,
    pub cubic_phase_aligned: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RationalComparison {
    pub p: u64,
    pub q: u64,
    pub eps: f64,
    pub points: Vec<RationalPoint>,
    pub depths: Vec<DepthRow>,
    /// Every normalized residual is below `NORMALIZED_BOUND` and their rung
    /// maxima have no upward trend in the depth.
    pub bounded: bool,
    /// Rung maxima of `raw` strictly decrease with depth.
    pub decreasing: bool,
    pub pass: bool,
}

fn rel<T: Real>(truth: &Complex<T>, model: &Complex<T>) -> f64 {
    (cplx::ln_abs(&(truth.clone() - model.clone())) - cplx::ln_abs(model)).exp()
}

/// Oracle `1/r` against the rational model on a ladder of depths.
pub fn compare_rational<T: Real>(
    params: &SpectralParams<T>,
    config: &RationalCompareConfig,
    ctx: &PrecisionContext,
) -> Result<RationalComparison> {
    let tag = match params.rational_tag {
        Some(t) => t,
        None => return domain("the rational comparison needs a rational tag"),
    };
    if config.depths.is_empty() || config.xis.is_empty() || config.depths.iter().any(|&d| !(d > 0.0)) {
        return domain("need positive depths and at least one xi");
    }
    let oracle = StarkOracle::with_config(PotentialSpec::default(), params.clone(), config.oracle.clone());
    let printed = RationalModel::new(params, ctx)?;
    let saddle = RationalModel::new(params, ctx)?.with_rho_scale(RhoScale::Saddle);
    let cubic = InverseRCubic::new(params, ctx);
    let eps = params.epsilon.clone();
    let i = Complex::new(T::zero(), T::one());
    let grid: Vec<(f64, f64)> = config
        .depths
        .iter()
        .flat_map(|&d| config.xis.iter().map(move |&x| (d, x)))
        .collect();
    let points = par_map(&grid, |&(depth, xi)| -> Result<RationalPoint> {
        let e = Complex::new(T::lift(xi, ctx) * &eps, -(T::lift(depth, ctx) * &eps));
        let o = oracle.inverse_r(&e, ctx)?;
        let pm = printed.eval(&e)?.value;
        let sm = saddle.eval(&e)?.value;
        let cm = cubic.eval(&e)?.value;
        let rho = (std::f64::consts::PI * depth).exp();
        let scale = rho.ln().powi(2) / rho;
        let raw = rel(&o.value, &pm);
        Ok(RationalPoint {
            depth,
            xi,
            rho,
            ln_abs_oracle: cplx::ln_abs(&o.value),
            oracle_rel_error: (o.est_error.ln_abs() - cplx::ln_abs(&o.value)).exp(),
            raw,
            normalized: raw / scale,
            phase_aligned: rel(&o.value, &cplx::mul(&pm, &i)),
            saddle_raw: rel(&o.value, &sm),
            saddle_phase_aligned: rel(&o.value, &cplx::mul(&sm, &i)),
            cubic_raw: rel(&o.value, &cm),
            cubic_phase_aligned: rel(&o.value, &cplx::mul(&cm, &i)),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut depths: Vec<DepthRow> = Vec::new();
    for &d in &config.depths {
        let on: Vec<&RationalPoint> = points.iter().filter(|p| p.depth == d).collect();
        let mx = |f: fn(&RationalPoint) -> f64| on.iter().map(|p| f(p)).fold(0.0, f64::max);
        depths.push(DepthRow {
            depth: d,
            raw: mx(|p| p.raw),
            normalized: mx(|p| p.normalized),
            phase_aligned: mx(|p| p.phase_aligned),
            saddle_phase_aligned: mx(|p| p.saddle_phase_aligned),
            cubic_phase_aligned: mx(|p| p.cubic_phase_aligned),
        });
    }
    depths.sort_by(|a, b| a.depth.partial_cmp(&b.depth).expect("finite depth"));
    let xs: Vec<f64> = depths.iter().map(|r| r.depth).collect();
    let ys: Vec<f64> = depths.iter().map(|r| r.normalized).collect();
    let bounded = points.iter().all(|p| p.normalized <= NORMALIZED_BOUND) && ls_slope(&xs, &ys) <= 0.0;
    let decreasing = depths.windows(2).all(|w| w[1].raw < w[0].raw);
    Ok(RationalComparison {
        p: tag.p,
        q: tag.q,
        eps: params.epsilon.to_f64(),
        points,
        depths,
        bounded,
        decreasing,
        pass: bounded && decreasing,
    })
}
