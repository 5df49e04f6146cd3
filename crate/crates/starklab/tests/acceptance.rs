//! Acceptance run. Prints one line per criterion and exits nonzero if any fails.
//!
//! `cargo test --test acceptance -- 6 11` runs a subset.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex;
use starklab::compare::{compare_fourier_samples, compare_rational, RationalCompareConfig};
use starklab::exp_sums::{parseval_defect, sum_table, support_census, CensusMode, CensusReport};
use starklab::models::{omega_zero_model, RationalModel};
use starklab::oracle::{fourier, PotentialSpec, StarkOracle};
use starklab::resonance::{
    count_in_strip, exponential_samples, find_zeros, ladder_asymptote, ladder_index, verify_strip_localization,
    LadderMode, SearchWindow,
};
use starklab::types::gcd;
use starklab::{cplx, epsilon_from_omega, make_spectral_params, BigFloat, CBig, PrecisionContext, Real};

type Outcome = starklab::Result<(bool, Vec<String>)>;

// pinned tolerances
const PARSEVAL_REL: f64 = 1e-12;
const UNIMODULAR: f64 = 1e-8;
const FREE_CONSTANT: f64 = 1e-8;
const POINT_SECONDS: f64 = 10.0;
const WINDOW_REL: f64 = 1e-12;
const COUNT_LO: f64 = 0.85;
const COUNT_HI: f64 = 1.15;
const LADDER_DEV: f64 = 0.1;

const FOURIER_BITS: u32 = 192;
const FOURIER_TOL: f64 = 1e-22;
const FOURIER_NODES: usize = 32;

fn fourier_ctx() -> PrecisionContext {
    PrecisionContext::new(FOURIER_BITS, FOURIER_TOL).expect("valid context")
}

fn census() -> &'static CensusReport {
    static C: OnceLock<CensusReport> = OnceLock::new();
    C.get_or_init(|| support_census::<f64>(300, CensusMode::AllP, &PrecisionContext::f64()).expect("census"))
}

/// Oracle samples of `1/r` at `eps = 2 pi^2/3` on `Im E = -eps/2`, shared by 6 and 11.
fn half_samples() -> &'static Vec<(CBig, f64)> {
    static S: OnceLock<Vec<(CBig, f64)>> = OnceLock::new();
    S.get_or_init(|| {
        let ctx = fourier_ctx();
        let sp = epsilon_from_omega::<BigFloat>(1, 2, 0, &ctx).expect("params");
        let oracle = StarkOracle::new(PotentialSpec::default(), sp);
        fourier::contour_samples(&oracle, 0.5, FOURIER_NODES, &ctx).expect("contour samples")
    })
}

fn c1_parseval() -> Outcome {
    let ctx = PrecisionContext::f64();
    let (mut worst, mut at, mut pairs) = (0.0f64, (0, 0), 0usize);
    for q in 1..=500u64 {
        for p in 0..q {
            if gcd(p, q) != 1 {
                continue;
            }
            let t = sum_table::<f64>(q, p, &ctx)?;
            let d = parseval_defect(&t) / (q * q) as f64;
            if d > worst {
                worst = d;
                at = (q, p);
            }
            pairs += 1;
        }
    }
    Ok((
        worst <= PARSEVAL_REL,
        vec![format!("{pairs} pairs, max defect/q^2 = {worst:.2e} at (q, p) = {at:?}, bound {PARSEVAL_REL:.0e}")],
    ))
}

fn c2_single_support() -> Outcome {
    let ctx = PrecisionContext::f64();
    let mut ok = true;
    let mut lines = Vec::new();
    for q in [2u64, 3, 6] {
        let t = sum_table::<f64>(q, 1, &ctx)?;
        ok &= t.support == vec![1];
        lines.push(format!("support({q}, 1) = {:?}", t.support));
    }
    let t = sum_table::<f64>(4, 1, &ctx)?;
    let want = [2.0, 2.0, 2.0, -2.0];
    let dev = (0..4).map(|m| (t.get(m) - Complex::new(want[m as usize], 0.0)).norm()).fold(0.0, f64::max);
    ok &= t.support == vec![0, 1, 2, 3] && dev <= t.zero_threshold;
    lines.push(format!(
        "support(4, 1) = {:?}, values {:?}, max deviation {dev:.1e} (threshold {:.1e})",
        t.support,
        (0..4).map(|m| t.get(m).re).collect::<Vec<_>>(),
        t.zero_threshold
    ));
    Ok((ok, lines))
}

fn c3_count_trend() -> Outcome {
    let c = census();
    Ok((
        c.min_ratio > 0.0,
        vec![format!(
            "{} coprime pairs, q <= 300: min |support|/q^(2/3) = {:.4} at (q, p) = {:?}",
            c.entries.len(),
            c.min_ratio,
            c.min_at
        )],
    ))
}

fn c4_prime_scan() -> Outcome {
    let c = census();
    let mut lines = Vec::new();
    let mut scanned = 0;
    for e in c.entries.iter().filter(|e| e.q <= 101 && starklab::exp_sums::is_prime(e.q)) {
        scanned += 1;
        if !e.counterexamples.is_empty() {
            lines.push(format!("counterexample: q = {}, p = {}, S_q(p, m) = 0 for m = {:?}", e.q, e.p, e.counterexamples));
        }
    }
    lines.insert(0, format!("{scanned} pairs (prime q <= 101, 0 < p < q) scanned to completion, {} counterexample rows", lines.len()));
    Ok((true, lines))
}

fn c5_oracle_sanity() -> Outcome {
    let ctx = PrecisionContext::new(256, 1e-20)?;
    let pi = BigFloat::pi(&ctx);
    let sp = make_spectral_params(pi.clone() * &pi, &ctx)?;
    let eps = sp.epsilon.to_f64();
    let oracle = StarkOracle::new(PotentialSpec::default(), sp.clone());
    let mut slowest = Duration::ZERO;
    let mut timed = |e: &CBig, o: &StarkOracle<BigFloat>| {
        let t = Instant::now();
        let s = o.connection_coeffs(e, &ctx);
        slowest = slowest.max(t.elapsed());
        s
    };

    let mut unimod = 0.0f64;
    for k in 0..64 {
        let e = cplx::c::<BigFloat>(eps * k as f64 / 64.0, 0.0, &ctx);
        let s = timed(&e, &oracle)?;
        unimod = unimod.max((cplx::to_c64(&s.r).norm() - 1.0).abs());
    }

    let mut periodic_ok = true;
    let mut worst_ratio = 0.0f64;
    for &d in &[0.5, 1.0, 1.5] {
        for &xi in &[0.1, 0.6] {
            let e = cplx::c::<BigFloat>(xi * eps, -d * eps, &ctx);
            let e1 = e.clone() + Complex::new(sp.epsilon.clone(), BigFloat::lift(0.0, &ctx));
            let a = timed(&e, &oracle)?;
            let b = timed(&e1, &oracle)?;
            let diff = cplx::to_c64(&(a.r.clone() - b.r.clone())).norm();
            let bound = a.est_error() + b.est_error();
            periodic_ok &= diff <= bound;
            worst_ratio = worst_ratio.max(diff / bound);
        }
    }

    let free = StarkOracle::new(PotentialSpec::zero(), sp.clone());
    let mut r0: Option<Complex<f64>> = None;
    let (mut spread, mut free_mod) = (0.0f64, 0.0f64);
    for k in 0..16 {
        let e = cplx::c::<BigFloat>(eps * (k as f64 / 8.0 - 1.0), 0.0, &ctx);
        let r = cplx::to_c64(&timed(&e, &free)?.r);
        let base = *r0.get_or_insert(r);
        spread = spread.max((r - base).norm());
        free_mod = free_mod.max((r.norm() - 1.0).abs());
    }

    let secs = slowest.as_secs_f64();
    let ok = unimod < UNIMODULAR && periodic_ok && spread < FREE_CONSTANT && free_mod < FREE_CONSTANT && secs <= POINT_SECONDS;
    Ok((
        ok,
        vec![
            format!("eps = pi^2: max ||r| - 1| on 64 real points = {unimod:.2e} (bound {UNIMODULAR:.0e})"),
            format!("r(E + eps) = r(E) at 6 points, Im E/eps in {{-0.5, -1, -1.5}}: max |diff|/est_error = {worst_ratio:.2e}"),
            format!("v = 0: spread of r over 16 points = {spread:.2e}, max ||r| - 1| = {free_mod:.2e} (bound {FREE_CONSTANT:.0e})"),
            format!("slowest point at 256 bits: {secs:.2} s (bound {POINT_SECONDS} s)"),
        ],
    ))
}

fn fourier_lines(c: &starklab::compare::FourierComparison) -> Vec<String> {
    let mut v = vec![format!(
        "eps = {:.6}, eta = {}, {} nodes: slope {:+.3}, max normalized {:.3} -> {}",
        c.eps,
        c.eta,
        c.nodes,
        c.slope,
        c.max_normalized,
        if c.pass { "ok" } else { "out of bounds" }
    )];
    for p in &c.points {
        v.push(format!(
            "  m = {}: |log p_num - log p_model| m/log^2 m = {:.3} (|Re| part {:.3}), arg ratio {:+.3}, est_error/|p| {:.1e}",
            p.m,
            p.normalized,
            p.normalized_abs,
            p.log_ratio.im,
            p.numeric_error / p.p_numeric.norm()
        ));
    }
    v
}

fn c6_fourier_law() -> Outcome {
    let ctx = fourier_ctx();
    let ms: Vec<i64> = (2..=6).collect();
    let one = make_spectral_params(BigFloat::lift(1.0, &ctx), &ctx)?;
    let oracle = StarkOracle::new(PotentialSpec::default(), one.clone());
    let s1 = fourier::contour_samples(&oracle, 0.5, FOURIER_NODES, &ctx)?;
    let a = compare_fourier_samples(&one, &s1, 0.5, &ms, &ctx)?;
    let half = epsilon_from_omega::<BigFloat>(1, 2, 0, &ctx)?;
    let b = compare_fourier_samples(&half, half_samples(), 0.5, &ms, &ctx)?;
    let mut lines = fourier_lines(&a);
    lines.extend(fourier_lines(&b));
    Ok((a.pass && b.pass, lines))
}

fn c7_window_consistency() -> Outcome {
    let ctx = PrecisionContext::new(128, 1e-30)?;
    let sp = epsilon_from_omega::<BigFloat>(0, 1, 1, &ctx)?;
    let rm = RationalModel::new(&sp, &ctx)?;
    let mut worst = 0.0f64;
    let mut nearest = 1.0f64;
    for i in 0..10 {
        let xi = (i as f64 + 0.25) / 10.0;
        nearest = nearest.min((xi - 0.5).abs());
        for j in 0..10 {
            let depth = 0.2 + 0.2 * j as f64;
            let e = cplx::scale(&cplx::c::<BigFloat>(xi, -depth, &ctx), &sp.epsilon);
            let a = rm.eval(&e)?.value;
            let (b, _) = omega_zero_model(&e, &sp, &ctx)?;
            let rel = (cplx::ln_abs(&(a.clone() - b.value)) - cplx::ln_abs(&a)).exp();
            worst = worst.max(rel);
        }
    }
    Ok((
        worst < WINDOW_REL,
        vec![format!(
            "100 points, xi at least {nearest:.3} from 1/2, depth 0.2..2.0: max relative difference {worst:.2e} (bound {WINDOW_REL:.0e})"
        )],
    ))
}

fn c8_rational_model() -> Outcome {
    let ctx = PrecisionContext::new(192, 1e-8)?;
    let cfg = RationalCompareConfig::default();
    let mut ok = true;
    let mut lines = Vec::new();
    for (p, q) in [(1u64, 2u64), (1, 3)] {
        let sp = epsilon_from_omega::<BigFloat>(p, q, 0, &ctx)?;
        let r = compare_rational(&sp, &cfg, &ctx)?;
        ok &= r.pass;
        lines.push(format!(
            "omega = {p}/{q}, eps = {:.6}, depths {:?}, xi {:?}: bounded {}, decreasing {}",
            r.eps, cfg.depths, cfg.xis, r.bounded, r.decreasing
        ));
        for d in &r.depths {
            lines.push(format!(
                "  depth {:.2}: raw {:.4e}, normalized {:.3}, i*model {:.3e}, rho/pi model {:.3e}, a(eps)P {:.3e} (last three phase-aligned)",
                d.depth, d.raw, d.normalized, d.phase_aligned, d.saddle_phase_aligned, d.cubic_phase_aligned
            ));
        }
        for pt in &r.points {
            lines.push(format!(
                "    xi {:.2} depth {:.2}: ln|1/r| {:.3}, oracle rel error {:.1e}",
                pt.xi, pt.depth, pt.ln_abs_oracle, pt.oracle_rel_error
            ));
        }
    }
    Ok((ok, lines))
}

fn c9_counting() -> Outcome {
    let ctx = PrecisionContext::new(128, 1e-12)?;
    let sp = epsilon_from_omega::<BigFloat>(0, 1, 1, &ctx)?;
    let ys = [1.5, 2.0, 2.5, 3.0];
    let mut lines = Vec::new();
    let mut in_band = true;
    let mut dist = Vec::new();
    for &y in &ys {
        let r = count_in_strip(&sp, y, &ctx)?;
        let v = r.log_pi_n_over_pi_y;
        in_band &= (COUNT_LO..=COUNT_HI).contains(&v);
        dist.push((v - 1.0).abs());
        lines.push(format!(
            "y = {y}: n = {}, ln(pi n)/(pi y) = {v:.4}; e^(pi y)/pi = {:.1}, e^(pi y)/pi^2 = {:.1}",
            r.n,
            (PI * y).exp() / PI,
            (PI * y).exp() / (PI * PI)
        ));
    }
    let approaching = dist.windows(2).all(|w| w[1] <= w[0]);
    let loc = verify_strip_localization(&sp, &ys[..3], 3.0, &ctx)?;
    let nonincreasing = loc.rows.windows(2).all(|w| w[1].c_estimate <= w[0].c_estimate);
    for row in &loc.rows {
        lines.push(format!(
            "zeros with {} < |Im E|/eps < {}: {} ({} on Re E = eps/2), max |Re E - eps/2| |Im E|/eps^2 = {:.3e}",
            row.y, loc.y_floor, row.zeros, row.on_line, row.c_estimate
        ));
    }
    lines.insert(
        0,
        format!("window [{COUNT_LO}, {COUNT_HI}]: {in_band}; trend toward 1: {approaching}; localization nonincreasing: {nonincreasing}"),
    );
    Ok((in_band && approaching && nonincreasing, lines))
}

fn c10_ladder() -> Outcome {
    let ctx = PrecisionContext::new(192, 1e-30)?;
    let sp = epsilon_from_omega::<BigFloat>(1, 4, 0, &ctx)?;
    let model = RationalModel::new(&sp, &ctx)?;
    let f = |e: &CBig| model.eval(e).map(|v| v.value);
    let (q, m1, m2) = (4u64, 1i64, 2i64);
    let half = 0.01;
    let mut lines = Vec::new();
    let mut devs = Vec::new();
    for y in [2.0, 2.5, 3.0] {
        let (sr, si) = exponential_samples(y + half);
        let win = SearchWindow::new(0.3, 0.45, -y - half, -y + half)?.with_samples(sr, si);
        let zs = find_zeros(&f, &win, &sp, &ctx)?;
        let (mut dev, mut dev_printed) = (0.0f64, 0.0f64);
        for z in &zs.zeros {
            let im = z.e_over_eps.im;
            let kb = ladder_index(im, q, m1, m2, LadderMode::Balanced);
            let kp = ladder_index(im, q, m1, m2, LadderMode::Printed);
            dev = dev.max((z.e_over_eps - ladder_asymptote(kb, q, m1, m2, LadderMode::Balanced)?.e_over_eps).norm());
            dev_printed = dev_printed.max((z.e_over_eps - ladder_asymptote(kp, q, m1, m2, LadderMode::Printed)?.e_over_eps).norm());
        }
        let k_top = ladder_index(-y + half, q, m1, m2, LadderMode::Balanced);
        let k_bot = ladder_index(-y - half, q, m1, m2, LadderMode::Balanced);
        let re_spread = zs.zeros.iter().map(|z| (z.e_over_eps.re - 0.375).abs()).fold(0.0, f64::max);
        lines.push(format!(
            "rho = e^({:.1} pi): {} zeros (complete {}), max |Re - 3/8| {re_spread:.1e}; nearest balanced rung {dev:.2e}; nearest printed rung {dev_printed:.3}; zeros per balanced rung {:.3}",
            y,
            zs.zeros.len(),
            zs.complete(),
            zs.zeros.len() as f64 / (k_bot - k_top) as f64
        ));
        devs.push(if zs.zeros.is_empty() || !zs.complete() { f64::INFINITY } else { dev });
    }
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    let deepest = *devs.last().expect("three rungs");
    lines.insert(0, format!("deepest deviation {deepest:.2e} (bound {LADDER_DEV}), decreasing {decreasing}"));
    Ok((deepest < LADDER_DEV && decreasing, lines))
}

fn c11_contour_independence() -> Outcome {
    let ctx = fourier_ctx();
    let sp = epsilon_from_omega::<BigFloat>(1, 2, 0, &ctx)?;
    let oracle = StarkOracle::new(PotentialSpec::default(), sp);
    let ms: Vec<i64> = (0..=6).collect();
    let mut sets = Vec::new();
    for eta in [0.25, 0.5, 1.0] {
        let coeffs = if eta == 0.5 {
            fourier::coeffs_from_samples(half_samples(), &ms, eta, &ctx)
        } else {
            let s = fourier::contour_samples(&oracle, eta, FOURIER_NODES, &ctx)?;
            fourier::coeffs_from_samples(&s, &ms, eta, &ctx)
        };
        sets.push((eta, coeffs));
    }
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, &m) in ms.iter().enumerate() {
        let mut worst = 0.0f64;
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                let (pa, pb) = (&sets[a].1[i], &sets[b].1[i]);
                let diff = cplx::to_c64(&(pa.value.clone() - pb.value.clone())).norm();
                let bound = pa.est_error.to_f64() + pb.est_error.to_f64();
                worst = worst.max(diff / bound);
            }
        }
        ok &= worst <= 1.0;
        let p = cplx::to_c64(&sets[1].1[i].value);
        lines.push(format!("m = {m}: |p| = {:.6e}, max |diff|/(combined est_error) = {worst:.3}", p.norm()));
    }
    Ok((ok, lines))
}

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "Parseval identity", c1_parseval),
        (2, "single-support sums", c2_single_support),
        (3, "support size trend", c3_count_trend),
        (4, "prime-q zero scan", c4_prime_scan),
        (5, "oracle sanity", c5_oracle_sanity),
        (6, "Fourier coefficient law", c6_fourier_law),
        (7, "q = 1 window consistency", c7_window_consistency),
        (8, "rational two-scale model", c8_rational_model),
        (9, "zero counting", c9_counting),
        (10, "resonance ladder", c10_ladder),
        (11, "contour independence", c11_contour_independence),
    ];
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let (pass, lines) = match run() {
            Ok(r) => r,
            Err(e) => (false, vec![format!("error: {e}")]),
        };
        println!("criterion {n:>2} {name:<26} {} ({:.1} s)", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        for l in lines {
            println!("    {l}");
        }
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
