//! Complete cubic exponential sums
//! `S_q(p, m) = sum_{l=0}^{q-1} exp(-2 pi i (p l^3 - m l) / q)`.
//!
//! Phases are reduced modulo `q` in integer arithmetic and looked up in a
//! table of `q`-th roots of unity, so large `q` costs no phase accuracy.

use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::bigfloat::BigFloat;
use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::types::{gcd, PrecisionContext};

#[derive(Clone, Debug)]
pub struct ExpSumTable<T> {
    pub q: u64,
    pub p: u64,
    /// `values[m] = S_q(p, m)` for `m = 0..q`.
    pub values: Vec<Complex<T>>,
    /// Sorted indices with `S_q(p, m) != 0`.
    pub support: Vec<usize>,
    pub zero_threshold: f64,
}

impl<T: Real> ExpSumTable<T> {
    /// `S_q(p, m)` for any integer `m`.
    pub fn get(&self, m: i64) -> &Complex<T> {
        &self.values[m.rem_euclid(self.q as i64) as usize]
    }

    pub fn is_zero(&self, m: i64) -> bool {
        self.support
            .binary_search(&(m.rem_euclid(self.q as i64) as usize))
            .is_err()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "p", "m", "re_S", "im_S", "abs_S", "is_zero"])?;
        for (m, s) in self.values.iter().enumerate() {
            let zero = self.support.binary_search(&m).is_err();
            w.write_record([
                self.q.to_string(),
                self.p.to_string(),
                m.to_string(),
                fmt_num(&s.re),
                fmt_num(&s.im),
                fmt_num(&crate::cplx::abs(s)),
                zero.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt_num<T: Real>(x: &T) -> String {
    crate::report::fmt_real(x)
}

fn check_pair(q: u64, p: u64) -> Result<()> {
    if q == 0 {
        return domain("q must be positive");
    }
    if gcd(p, q) != 1 {
        return domain(format!("gcd(p = {p}, q = {q}) != 1"));
    }
    Ok(())
}

/// `e^{-2 pi i j / q}` for `j = 0..q`.
fn roots_of_unity<T: Real>(q: u64, ctx: &PrecisionContext) -> Vec<Complex<T>> {
    let two_pi_over_q = T::pi(ctx) * T::lift_ratio(2, q as i64, ctx);
    (0..q)
        .map(|j| {
            let (s, c) = (two_pi_over_q.clone() * T::lift(j as f64, ctx)).sin_cos();
            Complex::new(c, -s)
        })
        .collect()
}

/// `p l^3 mod q` for `l = 0..q`.
fn cubic_residues(q: u64, p: u64) -> Vec<u64> {
    let q128 = q as u128;
    (0..q)
        .map(|l| {
            let l = l as u128;
            ((p as u128 % q128) * (l * l % q128 * l % q128) % q128) as u64
        })
        .collect()
}

fn sum_with<T: Real>(q: u64, m: i64, cubes: &[u64], roots: &[Complex<T>]) -> Complex<T> {
    let step = m.rem_euclid(q as i64) as u64;
    let mut re = T::zero();
    let mut im = T::zero();
    // ml is tracked incrementally mod q
    let mut ml = 0u64;
    for &a in cubes {
        let idx = if a >= ml { a - ml } else { a + q - ml };
        let w = &roots[idx as usize];
        re += &w.re;
        im += &w.im;
        ml += step;
        if ml >= q {
            ml -= q;
        }
    }
    Complex::new(re, im)
}

pub fn cubic_sum<T: Real>(q: u64, p: u64, m: i64, ctx: &PrecisionContext) -> Result<Complex<T>> {
    check_pair(q, p)?;
    let roots = roots_of_unity::<T>(q, ctx);
    Ok(sum_with(q, m, &cubic_residues(q, p), &roots))
}

fn effective_bits<T: Real>(ctx: &PrecisionContext) -> u32 {
    ctx.mantissa_bits().min(T::MAX_BITS)
}

/// Full table with the zero decision `|S| < q 2^{-b/2}` confirmed at `2b` bits.
pub fn sum_table<T: Real>(q: u64, p: u64, ctx: &PrecisionContext) -> Result<ExpSumTable<T>> {
    check_pair(q, p)?;
    let cubes = cubic_residues(q, p);
    let roots = roots_of_unity::<T>(q, ctx);
    let values: Vec<Complex<T>> = (0..q as i64).map(|m| sum_with(q, m, &cubes, &roots)).collect();
    let bits = effective_bits::<T>(ctx);
    let threshold = q as f64 * (-(bits as f64) / 2.0).exp2();
    let ln_thr = threshold.ln();
    let mut hi_roots: Option<Vec<Complex<BigFloat>>> = None;
    let mut support = Vec::with_capacity(q as usize);
    for (m, s) in values.iter().enumerate() {
        if crate::cplx::ln_abs(s) >= ln_thr {
            support.push(m);
            continue;
        }
        let hi_ctx = ctx.rebits(2 * bits);
        let roots = hi_roots.get_or_insert_with(|| roots_of_unity::<BigFloat>(q, &hi_ctx));
        let s_hi = sum_with(q, m as i64, &cubes, roots);
        let ln_strict = (q as f64).ln() - bits as f64 * std::f64::consts::LN_2;
        if crate::cplx::ln_abs(&s_hi) >= ln_strict {
            support.push(m);
        }
    }
    Ok(ExpSumTable {
        q,
        p,
        values,
        support,
        zero_threshold: threshold,
    })
}

/// `| sum_m |S_q(p,m)|^2 - q^2 |`.
pub fn parseval_defect<T: Real>(table: &ExpSumTable<T>) -> T {
    let mut acc = T::zero();
    for s in &table.values {
        acc.mul_add_assign(&s.re, &s.re);
        acc.mul_add_assign(&s.im, &s.im);
    }
    // q^2 is exact at 64 bits for any realistic q
    let q = T::lift(table.q as f64, &PrecisionContext::with_bits(64));
    (acc - q.clone() * q).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusMode {
    AllP,
    /// `p = 1`, `p = q - 1` and up to two interior coprime residues.
    SampleP,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusEntry {
    pub q: u64,
    pub p: u64,
    pub support_size: usize,
    pub ratio: f64,
    /// `m` with `0 < m < q` and `S_q(p, m) = 0`, recorded only for prime `q`.
    pub counterexamples: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub q_max: u64,
    pub entries: Vec<CensusEntry>,
    pub min_ratio: f64,
    pub min_at: (u64, u64),
    pub total_counterexamples: usize,
}

impl CensusReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn census_ps(q: u64, mode: CensusMode) -> Vec<u64> {
    let coprime: Vec<u64> = (1..q).filter(|&p| gcd(p, q) == 1).collect();
    match mode {
        CensusMode::AllP => coprime,
        CensusMode::SampleP => {
            let mut ps = vec![1, q - 1];
            let n = coprime.len();
            if n > 2 {
                ps.push(coprime[n / 3]);
                ps.push(coprime[2 * n / 3]);
            }
            ps.sort_unstable();
            ps.dedup();
            ps
        }
    }
}

pub fn support_census<T: Real>(q_max: u64, mode: CensusMode, ctx: &PrecisionContext) -> Result<CensusReport> {
    if q_max < 2 {
        return domain("q_max must be at least 2");
    }
    let mut entries = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let mut min_at = (0, 0);
    let mut total = 0;
    for q in 2..=q_max {
        let prime = is_prime(q);
        for p in census_ps(q, mode) {
            let t = sum_table::<T>(q, p, ctx)?;
            let size = t.support.len();
            let ratio = size as f64 / (q as f64).powf(2.0 / 3.0);
            let counterexamples: Vec<u64> = if prime {
                (1..q).filter(|&m| t.is_zero(m as i64)).collect()
            } else {
                Vec::new()
            };
            total += counterexamples.len();
            if ratio < min_ratio {
                min_ratio = ratio;
                min_at = (q, p);
            }
            entries.push(CensusEntry {
                q,
                p,
                support_size: size,
                ratio,
                counterexamples,
            });
        }
    }
    Ok(CensusReport {
        q_max,
        entries,
        min_ratio,
        min_at,
        total_counterexamples: total,
    })
}
