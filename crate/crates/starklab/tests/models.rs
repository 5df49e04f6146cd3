use std::f64::consts::{PI, TAU};

use num_complex::Complex;
use proptest::prelude::*;
use starklab::models::{fourier_coeff_model, CubicSum, InverseRCubic, RationalModel, RhoScale};
use starklab::{cplx, epsilon_from_omega, BigFloat, CBig, PrecisionContext, Real};

/// Straight double-precision sum of the cubic series with an exact `p m^3 mod q`.
fn direct_p(s: Complex<f64>, p: u64, q: u64) -> Complex<f64> {
    let mut acc = Complex::new(0.0, 0.0);
    for m in 1..80u64 {
        let mf = m as f64;
        let cube = (m % q) * (m % q) % q * (m % q) % q;
        let frac = (p * cube % q) as f64 / q as f64;
        let ln_mag = 0.5 * mf.ln() - 2.0 * mf * ((TAU * mf).ln() - 1.0);
        acc += (Complex::new(ln_mag, -TAU * frac) + Complex::new(0.0, TAU * mf) * s).exp();
    }
    acc
}

fn omega_n(p: u64) -> u64 {
    if p == 0 {
        1
    } else {
        0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cached_sum_matches_direct_sum(x in 0.0f64..1.0, y in 0.0f64..1.0, k in 0usize..4) {
        let (p, q) = [(0u64, 1u64), (1, 2), (1, 3), (2, 5)][k];
        let ctx = PrecisionContext::new(128, 1e-25).unwrap();
        let sp = epsilon_from_omega::<BigFloat>(p, q, omega_n(p), &ctx).unwrap();
        let sum = CubicSum::new(&sp, &ctx);
        let s = cplx::c::<BigFloat>(x, -y, &ctx);
        let got = cplx::to_c64(&sum.eval(&s).unwrap().value);
        let want = direct_p(Complex::new(x, -y), p, q);
        prop_assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-3), "{got} vs {want}");
    }

    #[test]
    fn rational_model_is_eps_periodic(xi in 0.0f64..1.0, depth in 0.3f64..2.5, k in 0usize..3) {
        let (p, q) = [(1u64, 2u64), (1, 3), (1, 4)][k];
        let ctx = PrecisionContext::new(128, 1e-25).unwrap();
        let sp = epsilon_from_omega::<BigFloat>(p, q, 0, &ctx).unwrap();
        let rm = RationalModel::new(&sp, &ctx).unwrap();
        let e = cplx::scale(&cplx::c::<BigFloat>(xi, -depth, &ctx), &sp.epsilon);
        let e1 = e.clone() + Complex::new(sp.epsilon.clone(), BigFloat::lift(0.0, &ctx));
        let a = rm.eval(&e).unwrap().value;
        let b = rm.eval(&e1).unwrap().value;
        let rel = (cplx::ln_abs(&(a.clone() - b)) - cplx::ln_abs(&a)).exp();
        prop_assert!(rel < 1e-20);
    }

    #[test]
    fn fourier_law_magnitude(m in 1i64..12, k in 0usize..3) {
        let (p, q) = [(0u64, 1u64), (1, 2), (2, 7)][k];
        let ctx = PrecisionContext::new(64, 1e-15).unwrap();
        let sp = epsilon_from_omega::<f64>(p, q, omega_n(p), &ctx).unwrap();
        let v = fourier_coeff_model(m, &sp, &ctx).unwrap().value;
        let mf = m as f64;
        let want = (2.0 / sp.epsilon).sqrt() * PI * mf.sqrt() * (1.0f64.exp() / (TAU * mf)).powf(2.0 * mf);
        prop_assert!((v.norm() / want - 1.0).abs() < 1e-12);
    }
}

/// `rho/pi` in the two-scale formula reproduces `a(eps) P` at depth, the printed
/// `rho` overshoots its logarithm about threefold.
#[test]
fn saddle_scale_reproduces_the_cubic_sum() {
    let ctx = PrecisionContext::new(192, 1e-30).unwrap();
    for (p, q) in [(0u64, 1u64), (1, 2), (1, 3)] {
        let sp = epsilon_from_omega::<BigFloat>(p, q, omega_n(p), &ctx).unwrap();
        let cubic = InverseRCubic::new(&sp, &ctx);
        let printed = RationalModel::new(&sp, &ctx).unwrap();
        let saddle = RationalModel::new(&sp, &ctx).unwrap().with_rho_scale(RhoScale::Saddle);
        assert_eq!(saddle.rho_scale(), RhoScale::Saddle);
        let mut prev = f64::INFINITY;
        for y in [1.5, 2.0, 2.5] {
            let e = cplx::scale(&cplx::c::<BigFloat>(0.2, -y, &ctx), &sp.epsilon);
            let c = cubic.eval(&e).unwrap().value;
            let s = saddle.eval(&e).unwrap().value;
            let rel = (cplx::ln_abs(&(c.clone() - s)) - cplx::ln_abs(&c)).exp();
            let rho = (PI * y).exp() / PI;
            assert!(rel < rho.ln().powi(2) / rho && rel < prev, "{p}/{q} y={y}: {rel}");
            prev = rel;
            let lp: f64 = cplx::ln_abs(&printed.eval(&e).unwrap().value);
            assert!(lp > 2.5 * cplx::ln_abs(&c), "{p}/{q} y={y}");
        }
    }
}

/// The partial sum is a polynomial in `e^{2 pi i s}`.
#[test]
fn truncated_sum_is_a_polynomial() {
    let ctx = PrecisionContext::new(128, 1e-30).unwrap();
    let sp = epsilon_from_omega::<BigFloat>(1, 3, 0, &ctx).unwrap();
    let t = CubicSum::truncated(&sp, &ctx, 5);
    let s = cplx::c::<BigFloat>(0.17, -0.4, &ctx);
    let got = t.eval(&s).unwrap();
    assert_eq!(got.truncation_index, Some(5));
    let mut want = Complex::new(0.0, 0.0);
    for m in 1..=5u64 {
        let mf = m as f64;
        let frac = ((m * m * m) % 3) as f64 / 3.0;
        let ln_mag = 0.5 * mf.ln() - 2.0 * mf * ((TAU * mf).ln() - 1.0);
        want += (Complex::new(ln_mag, -TAU * frac) + Complex::new(0.0, TAU * mf) * Complex::new(0.17, -0.4)).exp();
    }
    assert!((cplx::to_c64(&got.value) - want).norm() < 1e-13 * want.norm());
}

#[test]
fn line_phase_counts_turns() {
    // one full turn of e^{2 pi i s} plus the zeros below the line
    let ctx = PrecisionContext::new(128, 1e-20).unwrap();
    let sp = epsilon_from_omega::<BigFloat>(0, 1, 1, &ctx).unwrap();
    let sum = CubicSum::new(&sp, &ctx);
    let top = sum.line_phase(0.0).unwrap();
    assert!((top - TAU).abs() < 1e-9);
    let deep = sum.line_phase(1.5).unwrap();
    assert!((deep / TAU - 12.0).abs() < 1e-9);
    assert!(sum.line_phase(-0.1).is_err());
}

#[test]
fn on_line_values_are_real() {
    let ctx = PrecisionContext::new(128, 1e-20).unwrap();
    let sp = epsilon_from_omega::<BigFloat>(0, 1, 1, &ctx).unwrap();
    let sum = CubicSum::new(&sp, &ctx);
    let on: CBig = cplx::c(0.5, -1.3, &ctx);
    let near: CBig = cplx::c(0.5 + 1e-12, -1.3, &ctx);
    let a = cplx::to_c64(&sum.eval(&on).unwrap().value);
    let b = cplx::to_c64(&sum.eval(&near).unwrap().value);
    assert_eq!(a.im, 0.0);
    assert!((a.re - b.re).abs() < 1e-6 * a.norm());
}
