//! Zeros of `1/r` models: argument-principle counting, subdivision, Newton polish,
//! ladder asymptotes and the `omega = 0` strip statistics.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex;
use serde::Serialize;

use crate::cplx;
use crate::error::{domain, Result, StarkError};
use crate::models::{CubicSum, InverseRCubic};
use crate::par::par_map;
use crate::scalar::Real;
use crate::types::{PrecisionContext, SpectralParams};

/// Rectangle in the `E/eps` plane.
#[derive(Clone, Debug, Serialize)]
pub struct SearchWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Subdivision limit.
    pub max_depth: u32,
    /// Newton stops once the step in `E/eps` is below this.
    pub newton_tol: f64,
    /// Initial boundary samples per unit of `Re E/eps` and of `Im E/eps`. They
    /// must resolve the boundary phase to within a turn per sample, since two
    /// densities that alias alike are indistinguishable; see [`cubic_samples`].
    pub samples_per_unit: (f64, f64),
    /// The function is 1-periodic in `Re E/eps` and the window spans one
    /// period, so its two vertical sides cancel and are not traced.
    pub periodic_re: bool,
}

impl SearchWindow {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let w = SearchWindow {
            re_min,
            re_max,
            im_min,
            im_max,
            max_depth: 14,
            newton_tol: 1e-10,
            samples_per_unit: (16.0, 16.0),
            periodic_re: false,
        };
        w.validate()?;
        Ok(w)
    }

    /// One period cell `[0, 1] x [-depth, 0]`.
    pub fn period_cell(depth: f64) -> Result<Self> {
        let mut w = Self::new(0.0, 1.0, -depth, 0.0)?;
        w.periodic_re = true;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite());
        if !finite || !(self.re_min < self.re_max) || !(self.im_min < self.im_max) {
            return domain(format!(
                "bad window [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            ));
        }
        if self.im_max > 0.0 {
            return domain("window must lie in Im E <= 0");
        }
        if self.periodic_re && ((self.re_max - self.re_min) - 1.0).abs() > 1e-12 {
            return domain("a periodic window must span one period in Re E/eps");
        }
        if !(self.newton_tol > 0.0) || !(self.samples_per_unit.0 > 0.0) || !(self.samples_per_unit.1 > 0.0) {
            return domain("newton_tol and sample densities must be positive");
        }
        Ok(())
    }

    pub fn with_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_newton_tol(mut self, tol: f64) -> Self {
        self.newton_tol = tol;
        self
    }

    pub fn with_samples(mut self, re: f64, im: f64) -> Self {
        self.samples_per_unit = (re, im);
        self
    }

}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderMode {
    Printed,
    Balanced,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LadderPoint {
    pub k: u64,
    pub e_over_eps: Complex<f64>,
    pub mode: LadderMode,
}

/// Resonance ladder point for the gap between nonzero sums at `m1 < m2`.
///
/// `Printed`: `-i(ln(pi k)/pi - ln sin(pi (m2 - m1)/q)) + (m1 + m2)/q`.
/// `Balanced`: `-(i/pi)(ln(pi k) - ln(2 sin(pi (m2 - m1)/(2q)))) + (m1 + m2)/(2q)`.
pub fn ladder_asymptote(k: u64, q: u64, m1: i64, m2: i64, mode: LadderMode) -> Result<LadderPoint> {
    if k == 0 || q == 0 {
        return domain("ladder needs k >= 1 and q >= 1");
    }
    if m2 <= m1 || m2 - m1 >= q as i64 {
        return domain(format!("ladder needs m1 < m2 < m1 + q, got {m1}, {m2}"));
    }
    let qf = q as f64;
    let d = (m2 - m1) as f64;
    let lk = (PI * k as f64).ln();
    let (re, im) = match mode {
        LadderMode::Printed => {
            let s = (PI * d / qf).sin();
            if !(s.abs() > 1e-300) {
                return domain("sin(pi (m2 - m1)/q) = 0");
            }
            ((m1 + m2) as f64 / qf, -(lk / PI - s.abs().ln()))
        }
        LadderMode::Balanced => {
            let s = (PI * d / (2.0 * qf)).sin();
            if !(s.abs() > 1e-300) {
                return domain("sin(pi (m2 - m1)/(2q)) = 0");
            }
            ((m1 + m2) as f64 / (2.0 * qf), -(lk - (2.0 * s.abs()).ln()) / PI)
        }
    };
    Ok(LadderPoint {
        k,
        e_over_eps: Complex::new(re, im),
        mode,
    })
}

/// Nearest ladder index for a given `Im E/eps` (inverse of the ladder in `k`).
pub fn ladder_index(im_e_over_eps: f64, q: u64, m1: i64, m2: i64, mode: LadderMode) -> u64 {
    let qf = q as f64;
    let d = (m2 - m1) as f64;
    let lk = match mode {
        LadderMode::Printed => PI * (-im_e_over_eps + (PI * d / qf).sin().abs().ln()),
        LadderMode::Balanced => -PI * im_e_over_eps + (2.0 * (PI * d / (2.0 * qf)).sin().abs()).ln(),
    };
    (lk.exp() / PI).round().max(1.0) as u64
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Zero {
    pub e_over_eps: Complex<f64>,
    /// `|f/f'|` at the returned point, in units of `E/eps`.
    pub residual_abs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroSearch {
    pub zeros: Vec<Zero>,
    pub winding: i64,
    /// Zeros left in cells that hit the depth limit.
    pub unresolved: usize,
    pub evaluations: usize,
}

impl ZeroSearch {
    pub fn complete(&self) -> bool {
        self.unresolved == 0 && self.zeros.len() as i64 == self.winding
    }
}

// boundary points live on a dyadic lattice so shared edges reuse samples
const LATTICE_BITS: u32 = 40;
const LATTICE: u64 = 1 << LATTICE_BITS;

type Pt = (u64, u64);

struct Tracer<'a, T, F> {
    f: &'a F,
    eps: T,
    ctx: &'a PrecisionContext,
    win: &'a SearchWindow,
    args: Mutex<HashMap<Pt, f64>>,
    edges: Mutex<HashMap<(Pt, Pt, u32), f64>>,
    evals: AtomicUsize,
}

fn wrap(d: f64) -> f64 {
    d - TAU * (d / TAU).round()
}

impl<'a, T, F> Tracer<'a, T, F>
where
    T: Real,
    F: Fn(&Complex<T>) -> Result<Complex<T>> + Sync,
{
    fn new(f: &'a F, params: &SpectralParams<T>, win: &'a SearchWindow, ctx: &'a PrecisionContext) -> Self {
        Tracer {
            f,
            eps: params.epsilon.clone(),
            ctx,
            win,
            args: Mutex::new(HashMap::new()),
            edges: Mutex::new(HashMap::new()),
            evals: AtomicUsize::new(0),
        }
    }

    fn coords(&self, p: Pt) -> Complex<f64> {
        let w = self.win;
        let s = (LATTICE as f64).recip();
        Complex::new(
            w.re_min + (w.re_max - w.re_min) * (p.0 as f64 * s),
            w.im_min + (w.im_max - w.im_min) * (p.1 as f64 * s),
        )
    }

    fn energy(&self, z: Complex<f64>) -> Complex<T> {
        let c = cplx::c::<T>(z.re, z.im, self.ctx);
        cplx::scale(&c, &self.eps)
    }

    fn value(&self, z: Complex<f64>) -> Result<Complex<T>> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        (self.f)(&self.energy(z))
    }

    fn arg_of(&self, z: Complex<f64>) -> Result<f64> {
        let v = self.value(z)?;
        if v.re.is_zero() && v.im.is_zero() {
            return Err(StarkError::BoundaryZero { re: z.re, im: z.im });
        }
        let a = cplx::arg(&v).to_f64();
        if !a.is_finite() {
            return Err(StarkError::Precision(format!(
                "model value not representable at E/eps = {} {:+}i",
                z.re, z.im
            )));
        }
        Ok(a)
    }

    fn args_at(&self, pts: &[Pt]) -> Result<Vec<f64>> {
        let missing: Vec<Pt> = {
            let memo = self.args.lock().expect("arg memo");
            let mut m: Vec<Pt> = pts.iter().filter(|p| !memo.contains_key(p)).copied().collect();
            m.sort_unstable();
            m.dedup();
            m
        };
        let got = par_map(&missing, |&p| self.arg_of(self.coords(p)));
        {
            let mut memo = self.args.lock().expect("arg memo");
            for (p, a) in missing.iter().zip(got) {
                memo.insert(*p, a?);
            }
        }
        let memo = self.args.lock().expect("arg memo");
        Ok(pts.iter().map(|p| memo[p]).collect())
    }

    /// Phase increment along the axis-parallel segment `a -> b`.
    fn edge_phase(&self, a: Pt, b: Pt, density: u32) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        if let Some(v) = self.edges.lock().expect("edge memo").get(&(lo, hi, density)) {
            return Ok(sign * v);
        }
        let horizontal = lo.1 == hi.1;
        let (t0, t1) = if horizontal { (lo.0, hi.0) } else { (lo.1, hi.1) };
        let len = (t1 - t0) as f64 / LATTICE as f64;
        let span = if horizontal {
            (self.win.re_max - self.win.re_min) * len * self.win.samples_per_unit.0
        } else {
            (self.win.im_max - self.win.im_min) * len * self.win.samples_per_unit.1
        };
        let n0 = ((span * density as f64).ceil() as u64).clamp(2, (t1 - t0).max(1));
        let mut ts: Vec<u64> = (0..=n0).map(|k| t0 + ((t1 - t0) as u128 * k as u128 / n0 as u128) as u64).collect();
        ts.dedup();
        let pt = |t: u64| if horizontal { (t, lo.1) } else { (lo.0, t) };
        let cap = PI / 2.0;
        let total = loop {
            let pts: Vec<Pt> = ts.iter().map(|&t| pt(t)).collect();
            let a = self.args_at(&pts)?;
            let mut next = Vec::with_capacity(ts.len() * 2);
            let mut refined = false;
            let mut sum = 0.0;
            for k in 0..ts.len() - 1 {
                next.push(ts[k]);
                let d = wrap(a[k + 1] - a[k]);
                if d.abs() >= cap {
                    if ts[k + 1] - ts[k] < 2 {
                        let z = self.coords(pt(ts[k]));
                        return Err(StarkError::BoundaryZero { re: z.re, im: z.im });
                    }
                    next.push((ts[k] + ts[k + 1]) / 2);
                    refined = true;
                }
                sum += d;
            }
            next.push(*ts.last().expect("nonempty"));
            if !refined {
                break sum;
            }
            ts = next;
        };
        self.edges.lock().expect("edge memo").insert((lo, hi, density), total);
        Ok(sign * total)
    }

    fn winding_at(&self, c: Cell, density: u32) -> Result<i64> {
        let (a, b, cc, d) = ((c.i0, c.j0), (c.i1, c.j0), (c.i1, c.j1), (c.i0, c.j1));
        let sides = self.win.periodic_re && c.i0 == 0 && c.i1 == LATTICE;
        let mut total = self.edge_phase(a, b, density)? + self.edge_phase(cc, d, density)?;
        if !sides {
            total += self.edge_phase(b, cc, density)? + self.edge_phase(d, a, density)?;
        }
        let w = total / TAU;
        let n = w.round();
        if (w - n).abs() > 0.25 {
            return Err(StarkError::Precision(format!("non-integer winding {w}")));
        }
        Ok(n as i64)
    }

    /// Winding number, accepted once two successive sampling densities agree.
    fn winding(&self, c: Cell) -> Result<i64> {
        let mut density = 1;
        let mut prev = self.winding_at(c, density)?;
        while density < 1 << 10 {
            density *= 2;
            let w = self.winding_at(c, density)?;
            if w == prev {
                return Ok(w);
            }
            prev = w;
        }
        let z = self.coords((c.i0, c.j0));
        Err(StarkError::BoundaryZero { re: z.re, im: z.im })
    }

    fn log_derivative(&self, z: Complex<f64>, h: f64) -> Result<(Complex<f64>, bool)> {
        let f0 = self.value(z)?;
        let fp = self.value(z + h)?;
        let fm = self.value(z - h)?;
        if f0.re.is_zero() && f0.im.is_zero() {
            return Ok((Complex::new(0.0, 0.0), true));
        }
        let two_h = T::lift(2.0 * h, self.ctx);
        let num = fp - fm;
        let den = cplx::scale(&f0, &two_h);
        let l = cplx::to_c64(&(num / den));
        Ok((l, false))
    }

    fn newton_cell(&self, c: Cell, count: usize) -> Result<Option<Vec<Zero>>> {
        let lo = self.coords((c.i0, c.j0));
        let hi = self.coords((c.i1, c.j1));
        let diam = (hi - lo).norm();
        let tol = self.win.newton_tol;
        let h = (diam * 1e-6).max(1e-13 * (1.0 + lo.norm()));
        let inside = |z: Complex<f64>, slack: f64| {
            z.re >= lo.re - slack && z.re <= hi.re + slack && z.im >= lo.im - slack && z.im <= hi.im + slack
        };
        let fr = [0.5, 0.25, 0.75];
        let starts: Vec<Complex<f64>> = fr
            .iter()
            .flat_map(|&a| fr.iter().map(move |&b| (a, b)))
            .map(|(a, b)| Complex::new(lo.re + a * (hi.re - lo.re), lo.im + b * (hi.im - lo.im)))
            .collect();
        let mut found: Vec<Zero> = Vec::new();
        'zeros: while found.len() < count {
            for &z0 in &starts {
                let mut z = z0;
                let mut ok = false;
                let mut last = f64::INFINITY;
                for _ in 0..80 {
                    let (l, exact) = self.log_derivative(z, h)?;
                    if exact {
                        ok = true;
                        last = 0.0;
                        break;
                    }
                    let mut g = l;
                    for r in &found {
                        g -= (z - r.e_over_eps).inv();
                    }
                    if !(g.norm() > 0.0) || !g.re.is_finite() || !g.im.is_finite() {
                        break;
                    }
                    let mut step = g.inv();
                    let sn = step.norm();
                    if sn > 0.5 * diam {
                        step *= 0.5 * diam / sn;
                    }
                    z -= step;
                    if !inside(z, 0.5 * diam) {
                        break;
                    }
                    if step.norm() < tol {
                        ok = true;
                        // residual of the undeflated function
                        let (l, _) = self.log_derivative(z, h)?;
                        last = if l.norm() > 0.0 { l.norm().recip() } else { 0.0 };
                        break;
                    }
                }
                let fresh = found.iter().all(|r| (r.e_over_eps - z).norm() > 10.0 * tol);
                if ok && inside(z, 1e-9 * diam) && fresh {
                    found.push(Zero {
                        e_over_eps: z,
                        residual_abs: last,
                    });
                    continue 'zeros;
                }
            }
            return Ok(None);
        }
        Ok(Some(found))
    }
}

/// Cut positions in units of 1/10000 of a cell side, tried in turn; none is 1/2,
/// which keeps the cuts off symmetry lines such as `Re E = eps/2`.
const CUTS: [u128; 3] = [4713, 5371, 4129];

#[derive(Clone, Copy, Debug)]
struct Cell {
    i0: u64,
    j0: u64,
    i1: u64,
    j1: u64,
    depth: u32,
}

impl Cell {
    fn split(&self, win: &SearchWindow, frac: u128) -> Vec<Cell> {
        let w = (self.i1 - self.i0) as f64 * (win.re_max - win.re_min);
        let h = (self.j1 - self.j0) as f64 * (win.im_max - win.im_min);
        let cut = |a: u64, b: u64| a + ((b - a) as u128 * frac / 10000) as u64;
        let mi = cut(self.i0, self.i1);
        let mj = cut(self.j0, self.j1);
        let d = self.depth + 1;
        let c = |i0, j0, i1, j1| Cell { i0, j0, i1, j1, depth: d };
        if w > 2.0 * h {
            vec![c(self.i0, self.j0, mi, self.j1), c(mi, self.j0, self.i1, self.j1)]
        } else if h > 2.0 * w {
            vec![c(self.i0, self.j0, self.i1, mj), c(self.i0, mj, self.i1, self.j1)]
        } else {
            vec![
                c(self.i0, self.j0, mi, mj),
                c(mi, self.j0, self.i1, mj),
                c(self.i0, mj, mi, self.j1),
                c(mi, mj, self.i1, self.j1),
            ]
        }
    }
}

fn root_cell() -> Cell {
    Cell {
        i0: 0,
        j0: 0,
        i1: LATTICE,
        j1: LATTICE,
        depth: 0,
    }
}

/// Winding number of `f` around the window boundary (zeros inside, counted with multiplicity).
pub fn winding_number<T, F>(f: &F, window: &SearchWindow, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<i64>
where
    T: Real,
    F: Fn(&Complex<T>) -> Result<Complex<T>> + Sync,
{
    window.validate()?;
    Tracer::new(f, params, window, ctx).winding(root_cell())
}

/// All zeros of `f` in the window, with `E = eps (re + i im)`.
///
/// Cells are quartered until their winding number is at most 4, then Newton
/// with deflation runs from a grid of starts; a cell whose zeros Newton cannot
/// all recover is subdivided further. Zeros are sorted by `(Re, Im)`.
pub fn find_zeros<T, F>(f: &F, window: &SearchWindow, params: &SpectralParams<T>, ctx: &PrecisionContext) -> Result<ZeroSearch>
where
    T: Real,
    F: Fn(&Complex<T>) -> Result<Complex<T>> + Sync,
{
    window.validate()?;
    let tr = Tracer::new(f, params, window, ctx);
    let root = root_cell();
    let total = tr.winding(root)?;
    if total < 0 {
        return domain(format!("negative winding {total}: model has poles in the window"));
    }
    let mut zeros = Vec::new();
    let mut unresolved = 0usize;
    let mut todo = vec![(root, total)];
    while let Some((cell, w)) = todo.pop() {
        if w == 0 {
            continue;
        }
        if w <= 4 {
            if let Some(z) = tr.newton_cell(cell, w as usize)? {
                zeros.extend(z);
                continue;
            }
        }
        if cell.depth >= window.max_depth || cell.i1 - cell.i0 < 4 || cell.j1 - cell.j0 < 4 {
            unresolved += w as usize;
            continue;
        }
        // a zero on a cut line shows up as a failed or inconsistent split; move the cut
        let mut split = None;
        for frac in CUTS {
            let kids = cell.split(window, frac);
            match kids.iter().map(|k| tr.winding(*k)).collect::<Result<Vec<i64>>>() {
                Ok(ws) if ws.iter().sum::<i64>() == w => {
                    split = Some(kids.into_iter().zip(ws));
                    break;
                }
                Ok(_) | Err(StarkError::BoundaryZero { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        match split {
            Some(s) => todo.extend(s),
            None => {
                let z = tr.coords((cell.i0, cell.j0));
                return Err(StarkError::BoundaryZero { re: z.re, im: z.im });
            }
        }
    }
    zeros.sort_by(|a, b| {
        (a.e_over_eps.re, a.e_over_eps.im)
            .partial_cmp(&(b.e_over_eps.re, b.e_over_eps.im))
            .expect("finite zeros")
    });
    Ok(ZeroSearch {
        zeros,
        winding: total,
        unresolved,
        evaluations: tr.evals.load(Ordering::Relaxed),
    })
}

/// `n(y)` with the diagnostic `ln(pi n)/(pi y)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CountReport {
    pub y: f64,
    pub n: i64,
    pub log_pi_n_over_pi_y: f64,
}

fn require_omega_zero<T: Real>(params: &SpectralParams<T>) -> Result<()> {
    let w = params.omega.to_f64();
    let zero = match params.rational_tag {
        Some(t) => t.p == 0,
        None => w.min(1.0 - w) < 1e-12,
    };
    if zero {
        Ok(())
    } else {
        domain(format!("needs omega = 0, got {w}"))
    }
}

/// Dominant index of `P` at depth `y`: `2 ln(2 pi m) = 2 pi y`.
fn peak_index(y: f64) -> f64 {
    (PI * y).exp() / TAU
}

/// Boundary densities resolving `a(eps) P` (optionally truncated) down to depth `y`.
///
/// The dominant index `m` turns the phase `2 pi m` per unit of `Re E/eps`, and
/// the dominant index itself moves by about `pi m` per unit of `Im E/eps`.
pub fn cubic_samples(y: f64, terms: Option<usize>) -> (f64, f64) {
    let m = terms.map_or(peak_index(y), |n| (n as f64).min(peak_index(y)));
    (4.0 * m + 16.0, 4.0 * PI * m + 16.0)
}

/// Boundary densities for exponents `rho e^{i pi theta}` (rational and `omega = 0`
/// models) down to depth `y`; the phase turns at most `pi rho` per unit.
pub fn exponential_samples(y: f64) -> (f64, f64) {
    let rho = (PI * y).exp();
    (4.0 * rho + 16.0, 4.0 * rho + 16.0)
}

/// Zeros of `a(eps) P(E/eps)` in `[0, eps] x [-eps y, 0]` by the argument principle.
///
/// The vertical sides of a full period cancel, so the count is the difference
/// of the phase turns of `P` along `Im s = -y` and `Im s = 0` (see
/// [`CubicSum::line_phase`]). A zero on the lower side moves it by
/// `10^-4` and retries.
pub fn count_in_strip<T: Real>(params: &SpectralParams<T>, y: f64, ctx: &PrecisionContext) -> Result<CountReport> {
    require_omega_zero(params)?;
    if !(y >= 1.0) {
        return domain(format!("count_in_strip needs y >= 1, got {y}"));
    }
    let sum = CubicSum::new(params, ctx);
    let top = sum.line_phase(0.0)?;
    let mut last = None;
    for shift in [0.0, 1e-4, -1e-4, 2e-4] {
        match sum.line_phase(y + shift) {
            Ok(bottom) => {
                let n = ((bottom - top) / TAU).round() as i64;
                return Ok(CountReport {
                    y,
                    n,
                    log_pi_n_over_pi_y: (PI * n as f64).ln() / (PI * y),
                });
            }
            Err(e @ StarkError::BoundaryZero { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalizationRow {
    pub y: f64,
    /// Zeros with `-y_floor < Im E/eps < -y`.
    pub zeros: i64,
    /// Those on the line `Re E = eps/2`.
    pub on_line: i64,
    /// `max |Re E - eps/2| |Im E| / eps^2` over the zeros.
    pub c_estimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizationReport {
    pub y_floor: f64,
    pub rows: Vec<LocalizationRow>,
    /// Largest `c_estimate` over the rows.
    pub c_max: f64,
}

/// Deviation of the `omega = 0` zeros from `Re E = eps/2` below each `y`.
///
/// For `omega = 0` the sum `P(1/2 - i t)` is real, so zeros on the line are
/// sign changes. Each band between consecutive `y` values is counted by the
/// argument principle; when the two counts agree every zero of the band is on
/// the line, otherwise the band is searched in full with [`find_zeros`].
pub fn verify_strip_localization<T: Real>(
    params: &SpectralParams<T>,
    y_list: &[f64],
    y_floor: f64,
    ctx: &PrecisionContext,
) -> Result<LocalizationReport> {
    require_omega_zero(params)?;
    let mut ys: Vec<f64> = y_list.to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).expect("finite y"));
    if ys.is_empty() || !(ys[0] > 0.0) || !(y_floor > *ys.last().expect("nonempty")) {
        return domain("need 0 < y_1 < ... < y_floor");
    }
    let model = InverseRCubic::new(params, ctx);
    let f = |e: &Complex<T>| model.eval(e).map(|v| v.value);
    let mut levels = Vec::new();
    for &y in ys.iter().chain(std::iter::once(&y_floor)) {
        levels.push(model.sum.line_phase(y)?);
    }
    let mut bands = Vec::new();
    for (i, &y) in ys.iter().enumerate() {
        let y_next = ys.get(i + 1).copied().unwrap_or(y_floor);
        let total = ((levels[i + 1] - levels[i]) / TAU).round() as i64;
        let on_line = line_sign_changes(&model, y, y_next, ctx)?;
        if on_line > total {
            return Err(StarkError::Precision(format!(
                "{on_line} sign changes on the line exceed the winding number {total} in ({y}, {y_next})"
            )));
        }
        let dev = if on_line == total {
            0.0
        } else {
            let (sr, si) = cubic_samples(y_next, None);
            let mut win = SearchWindow::new(0.0, 1.0, -y_next, -y)?.with_samples(sr, si);
            win.periodic_re = true;
            let zs = find_zeros(&f, &win, params, ctx)?;
            if !zs.complete() {
                return Err(StarkError::DepthExceeded {
                    unresolved: zs.unresolved.max(1),
                });
            }
            zs.zeros
                .iter()
                .map(|z| (z.e_over_eps.re - 0.5).abs() * z.e_over_eps.im.abs())
                .fold(0.0, f64::max)
        };
        bands.push((y, total, on_line, dev));
    }
    // cumulative from the floor upwards
    let mut rows = Vec::new();
    let (mut zeros, mut on_line, mut c) = (0i64, 0i64, 0.0f64);
    for &(y, n, l, d) in bands.iter().rev() {
        zeros += n;
        on_line += l;
        c = c.max(d);
        rows.push(LocalizationRow {
            y,
            zeros,
            on_line,
            c_estimate: c,
        });
    }
    rows.reverse();
    Ok(LocalizationReport {
        y_floor,
        c_max: rows.iter().map(|r| r.c_estimate).fold(0.0, f64::max),
        rows,
    })
}

/// Sign changes of the real function `P(1/2 - i t)` for `t` in `(y0, y1)`.
///
/// `s` is built exactly on the line: going through `E = eps s` would move it
/// off by a rounding error, which the cancellation in `P` amplifies.
pub fn line_sign_changes<T: Real>(model: &InverseRCubic<T>, y0: f64, y1: f64, ctx: &PrecisionContext) -> Result<i64> {
    // about e^{pi t}/pi zeros per unit depth: eight samples per expected zero,
    // spaced evenly in e^{pi t}
    let (a, b) = ((PI * y0).exp(), (PI * y1).exp());
    let n = ((b - a) * 8.0 / (PI * PI) + 64.0).ceil() as usize;
    let ts: Vec<f64> = (0..=n)
        .map(|k| match k {
            0 => y0,
            k if k == n => y1,
            k => (a + (b - a) * k as f64 / n as f64).ln() / PI,
        })
        .collect();
    let signs = par_map(&ts, |&t| -> Result<i32> {
        let s = Complex::new(T::lift(0.5, ctx), T::lift(-t, ctx));
        let v = model.sum.eval(&s)?.value;
        Ok(if v.re.is_zero() {
            0
        } else if v.re.is_negative() {
            -1
        } else {
            1
        })
    });
    let mut prev = 0;
    let mut count = 0;
    for s in signs {
        let s = s?;
        if s != 0 {
            if prev != 0 && s != prev {
                count += 1;
            }
            prev = s;
        }
    }
    Ok(count)
}

/// One zero row for the CSV.
#[derive(Clone, Debug)]
pub struct ZeroRow {
    pub model: String,
    pub eps: f64,
    pub omega_p: Option<u64>,
    pub omega_q: Option<u64>,
    pub k_guess: Option<u64>,
    pub zero: Zero,
}

pub fn write_zeros_csv<W: Write>(rows: &[ZeroRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "eps", "omega_p", "omega_q", "k_guess", "re_E_over_eps", "im_E_over_eps", "residual_abs"])?;
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.model.clone(),
            format!("{:.17e}", r.eps),
            opt(r.omega_p),
            opt(r.omega_q),
            opt(r.k_guess),
            format!("{:.15e}", r.zero.e_over_eps.re),
            format!("{:.15e}", r.zero.e_over_eps.im),
            format!("{:.3e}", r.zero.residual_abs),
        ])?;
    }
    w.flush()?;
    Ok(())
}
