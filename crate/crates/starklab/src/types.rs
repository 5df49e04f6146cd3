//! Precision context, spectral parameters and scaled energy coordinates.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Working precision and target accuracy, passed explicitly to every routine.
///
/// Cloning shares the cached constants.
#[derive(Clone)]
pub struct PrecisionContext {
    mantissa_bits: u32,
    tolerance: f64,
    pi: Arc<OnceLock<Float>>,
}

impl PrecisionContext {
    pub fn new(mantissa_bits: u32, tolerance: f64) -> Result<Self> {
        if mantissa_bits < 53 {
            return domain(format!("mantissa_bits = {mantissa_bits} < 53"));
        }
        let floor = (8.0 - mantissa_bits as f64).exp2();
        if !(tolerance > 0.0) || tolerance < floor {
            return domain(format!(
                "tolerance {tolerance:e} outside [2^(8-{mantissa_bits}), inf)"
            ));
        }
        Ok(PrecisionContext {
            mantissa_bits,
            tolerance,
            pi: Arc::new(OnceLock::new()),
        })
    }

    /// Context whose tolerance sits 24 bits above the rounding level.
    pub fn with_bits(mantissa_bits: u32) -> Self {
        let bits = mantissa_bits.max(53);
        let tol = (24.0 - bits as f64).exp2().max(f64::MIN_POSITIVE);
        Self::new(bits, tol).expect("valid by construction")
    }

    /// Double-precision context.
    pub fn f64() -> Self {
        Self::new(53, 1e-12).expect("valid by construction")
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Same tolerance, different precision; constants are recomputed.
    pub fn rebits(&self, mantissa_bits: u32) -> Self {
        if mantissa_bits == self.mantissa_bits {
            return self.clone();
        }
        PrecisionContext {
            mantissa_bits: mantissa_bits.max(53),
            tolerance: self.tolerance,
            pi: Arc::new(OnceLock::new()),
        }
    }

    /// Same precision, different tolerance.
    pub fn with_tolerance(&self, tolerance: f64) -> Result<Self> {
        let mut c = Self::new(self.mantissa_bits, tolerance)?;
        c.pi = self.pi.clone();
        Ok(c)
    }

    pub(crate) fn pi_mpfr(&self) -> &Float {
        self.pi
            .get_or_init(|| Float::with_val(self.mantissa_bits, rug::float::Constant::Pi))
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::new(256, 1e-24).expect("valid by construction")
    }
}

impl fmt::Debug for PrecisionContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrecisionContext")
            .field("mantissa_bits", &self.mantissa_bits)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

/// Exact rational phase `omega = p/q` with `pi^2/(3 eps) = n + p/q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalTag {
    pub p: u64,
    pub q: u64,
    pub n: u64,
}

#[derive(Clone, Debug)]
pub struct SpectralParams<T> {
    pub epsilon: T,
    pub omega: T,
    pub rational_tag: Option<RationalTag>,
}

impl<T: Real> SpectralParams<T> {
    /// `omega * m^3 mod 1`, exact when the phase is tagged rational.
    pub fn cubic_phase(&self, m: i64, ctx: &PrecisionContext) -> T {
        match self.rational_tag {
            Some(tag) => {
                let q = tag.q as i128;
                let m = (m as i128).rem_euclid(q);
                let r = (tag.p as i128 * ((m * m % q) * m % q)) % q;
                T::lift_ratio(r as i64, tag.q as i64, ctx)
            }
            None => {
                let m3 = T::lift(m as f64, ctx) * T::lift(m as f64, ctx) * T::lift(m as f64, ctx);
                let x = self.omega.clone() * m3;
                x.clone() - x.floor()
            }
        }
    }
}

pub fn make_spectral_params<T: Real>(epsilon: T, ctx: &PrecisionContext) -> Result<SpectralParams<T>> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return domain(format!("epsilon must be positive, got {epsilon}"));
    }
    let pi = T::pi(ctx);
    let x = pi.sqr() / (T::lift(3.0, ctx) * &epsilon);
    let omega = x.clone() - x.floor();
    Ok(SpectralParams {
        epsilon,
        omega,
        rational_tag: None,
    })
}

pub fn epsilon_from_omega<T: Real>(p: u64, q: u64, n: u64, ctx: &PrecisionContext) -> Result<SpectralParams<T>> {
    if q == 0 {
        return domain("q must be positive");
    }
    if gcd(p, q) != 1 {
        return domain(format!("p = {p} and q = {q} are not coprime"));
    }
    if p >= q {
        return domain(format!("need 0 <= p < q, got p = {p}, q = {q}"));
    }
    if n == 0 && p == 0 {
        return domain("n + p/q must be positive");
    }
    let nq = (n * q + p) as i64;
    let pi = T::pi(ctx);
    // eps = pi^2 q / (3 (n q + p))
    let epsilon = pi.sqr() * T::lift_ratio(q as i64, 3 * nq, ctx);
    Ok(SpectralParams {
        epsilon,
        omega: T::lift_ratio(p as i64, q as i64, ctx),
        rational_tag: Some(RationalTag { p, q, n }),
    })
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Energy with its scaled coordinates `xi = Re E / eps`, `rho = exp(-pi Im E / eps)`.
#[derive(Clone, Debug)]
pub struct EnergyPoint<T> {
    pub e: Complex<T>,
    pub xi: T,
    pub rho: T,
}

pub fn scaled_coords<T: Real>(e: &Complex<T>, params: &SpectralParams<T>, ctx: &PrecisionContext) -> EnergyPoint<T> {
    let xi = e.re.clone() / &params.epsilon;
    let rho = (-(T::pi(ctx) * &e.im) / &params.epsilon).exp();
    EnergyPoint { e: e.clone(), xi, rho }
}

impl<T: Real> EnergyPoint<T> {
    /// Inverse of [`scaled_coords`].
    pub fn energy(&self, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Complex<T> {
        let re = self.xi.clone() * &params.epsilon;
        let im = -(self.rho.ln() * &params.epsilon) / T::pi(ctx);
        Complex::new(re, im)
    }
}

/// Value of an asymptotic model or a quadrature, with its error bookkeeping.
#[derive(Clone, Debug)]
pub struct ModelValue<T> {
    pub value: Complex<T>,
    /// Last summation index used, where a truncated series is involved.
    pub truncation_index: Option<usize>,
    /// Absolute error estimate (tail bound, quadrature difference or theoretical scale).
    pub est_error: T,
}
