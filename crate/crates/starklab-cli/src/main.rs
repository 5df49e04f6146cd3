use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use serde_json::{json, Value};

use starklab::compare::{compare_fourier, compare_rational, RationalCompareConfig};
use starklab::exp_sums::{sum_table, support_census, CensusMode};
use starklab::models::{fourier_coeff_model, omega_zero_model, write_grid_csv, GridRow, InverseRCubic, RationalModel};
use starklab::oracle::{fourier, write_fourier_csv, write_oracle_csv, FourierRow, PotentialSpec, StarkOracle};
use starklab::par::par_map;
use starklab::report::{fmt_f64, fmt_real, Manifest};
use starklab::resonance::{
    count_in_strip, cubic_samples, exponential_samples, find_zeros, ladder_asymptote, verify_strip_localization, write_zeros_csv, LadderMode, SearchWindow,
    ZeroRow,
};
use starklab::{
    epsilon_from_omega, make_spectral_params, scaled_coords, BigFloat, ModelValue, ParamsBig, PrecisionContext, Real,
    StarkError, CBig,
};

#[derive(Parser)]
#[command(name = "starklab", version, about = "Reflection coefficient asymptotics and Stark-Wannier resonances")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Field strength.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Rational phase `p/q[:n]`, i.e. `pi^2/(3 eps) = n + p/q`.
    #[arg(long, global = true, value_parser = parse_omega)]
    omega: Option<Omega>,
    /// Mantissa bits.
    #[arg(long, global = true, default_value_t = 256)]
    prec: u32,
    /// Relative tolerance [default: max(1e-20, 2^(16 - prec))].
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// `re_min,re_max,im_min,im_max` in units of eps.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_window)]
    window: Option<Window>,
    /// Artifact path; a manifest is written next to it. Default: stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    /// `a(eps) P(E/eps)`.
    Cubic,
    /// Two-scale rational formula (needs --omega).
    Rational,
    /// `b(eps) sqrt(z) e^{sqrt z}`.
    OmegaZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Printed,
    Balanced,
}

#[derive(Clone, Copy, Debug)]
struct Omega {
    p: u64,
    q: u64,
    n: u64,
}

#[derive(Clone, Copy, Debug)]
struct Window([f64; 4]);

#[derive(Clone, Debug)]
struct Ints(Vec<i64>);

#[derive(Clone, Debug)]
struct Floats(Vec<f64>);

#[derive(Clone, Copy, Debug)]
struct Grid(usize, usize);

#[derive(Subcommand)]
enum Cmd {
    /// Table of S_q(p, m), m = 0..q-1.
    Sums {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 1)]
        p: u64,
    },
    /// Support sizes of S_q(p, .) for q <= q_max and prime-q counterexample scan.
    Census {
        #[arg(long, default_value_t = 101)]
        q_max: u64,
        /// Only p = 1, q - 1 and two interior residues per q.
        #[arg(long)]
        sample_p: bool,
    },
    /// Fourier-law coefficients p(m).
    Pm {
        #[arg(long, default_value = "1..8", value_parser = parse_ints)]
        m: Ints,
    },
    /// A model of 1/r on a grid over --window.
    Model {
        #[arg(long, value_enum, default_value_t = ModelKind::Cubic)]
        model: ModelKind,
        /// Points along Re and Im.
        #[arg(long, default_value = "9,5", value_parser = parse_grid)]
        grid: Grid,
    },
    /// Oracle r(E) on a grid over --window.
    Oracle {
        #[arg(long, default_value = "4,1", value_parser = parse_grid)]
        grid: Grid,
    },
    /// Oracle Fourier coefficients of 1/r by the trapezoid rule on Im E = -eta eps.
    Fourier {
        #[arg(long, default_value = "0..6", value_parser = parse_ints)]
        m: Ints,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 32)]
        nodes: usize,
    },
    /// Zeros of a model in --window.
    Zeros {
        #[arg(long, value_enum, default_value_t = ModelKind::Cubic)]
        model: ModelKind,
        /// Truncate P after this many terms.
        #[arg(long)]
        terms: Option<usize>,
        #[arg(long, default_value_t = 14)]
        max_depth: u32,
        #[arg(long, default_value_t = 1e-10)]
        newton_tol: f64,
    },
    /// Resonance ladder asymptotes.
    Ladder {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m1: i64,
        #[arg(long)]
        m2: i64,
        #[arg(long, default_value = "1..20", value_parser = parse_ints)]
        k: Ints,
        #[arg(long, value_enum, default_value_t = Mode::Balanced)]
        mode: Mode,
    },
    /// Zero counts n(y) of a(eps) P in one period cell (omega = 0).
    Count {
        #[arg(long, default_value = "1.5,2,2.5", value_parser = parse_floats)]
        y: Floats,
        /// Also report localization about Re E = eps/2 down to this depth.
        #[arg(long)]
        localize: Option<f64>,
    },
    /// Oracle against models, with residuals normalized by the error scales.
    Compare {
        /// Rational phase `p/q` (eps from n = 0); without it, the Fourier law is compared.
        #[arg(long, value_parser = parse_omega)]
        rational: Option<Omega>,
        #[arg(long, default_value = "1.0,1.1,1.2", value_parser = parse_floats)]
        depth: Floats,
        #[arg(long, default_value = "0.3,0.55", value_parser = parse_floats)]
        xi: Floats,
        #[arg(long, default_value = "2..6", value_parser = parse_ints)]
        m: Ints,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 32)]
        nodes: usize,
    },
}

fn parse_omega(s: &str) -> Result<Omega, String> {
    let (frac, n) = match s.split_once(':') {
        Some((f, n)) => (f, n.trim().parse::<u64>().map_err(|e| format!("bad n: {e}"))?),
        None => (s, 0),
    };
    let (p, q) = frac.split_once('/').ok_or_else(|| format!("expected p/q[:n], got {s}"))?;
    let p = p.trim().parse::<u64>().map_err(|e| format!("bad p: {e}"))?;
    let q = q.trim().parse::<u64>().map_err(|e| format!("bad q: {e}"))?;
    Ok(Omega { p, q, n })
}

fn parse_floats(s: &str) -> Result<Floats, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number {t}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Floats)
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v = parse_floats(s)?.0;
    if v.len() != 4 {
        return Err(format!("expected re_min,re_max,im_min,im_max, got {s}"));
    }
    Ok(Window([v[0], v[1], v[2], v[3]]))
}

/// `a..b` (inclusive) or a comma list.
fn parse_ints(s: &str) -> Result<Ints, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a = a.trim().parse::<i64>().map_err(|e| format!("bad range start: {e}"))?;
        let b = b.trim().parse::<i64>().map_err(|e| format!("bad range end: {e}"))?;
        if b < a {
            return Err(format!("empty range {s}"));
        }
        return Ok(Ints((a..=b).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("bad integer {t}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Ints)
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad count {t}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [nx, ny] if nx > 0 && ny > 0 => Ok(Grid(nx, ny)),
        _ => Err(format!("expected nx,ny > 0, got {s}")),
    }
}

enum Fail {
    Usage(String),
    Numeric(String),
}

impl From<StarkError> for Fail {
    fn from(e: StarkError) -> Self {
        match e {
            StarkError::Domain(_) => Fail::Usage(e.to_string()),
            _ => Fail::Numeric(e.to_string()),
        }
    }
}

type Run<T> = std::result::Result<T, Fail>;

fn usage<T>(msg: impl Into<String>) -> Run<T> {
    Err(Fail::Usage(msg.into()))
}

/// What a command hands back before serialization.
enum Artifact {
    Csv(Vec<u8>),
    Json(Value),
}

fn params(c: &Common, ctx: &PrecisionContext) -> Run<ParamsBig> {
    match (c.omega, c.eps) {
        (Some(_), Some(_)) => usage("give --eps or --omega, not both"),
        (Some(o), None) => Ok(epsilon_from_omega(o.p, o.q, o.n, ctx)?),
        (None, Some(e)) => Ok(make_spectral_params(BigFloat::lift(e, ctx), ctx)?),
        (None, None) => usage("this command needs --eps or --omega"),
    }
}

fn tolerance(c: &Common) -> f64 {
    c.tol.unwrap_or_else(|| (16.0 - c.prec as f64).exp2().max(1e-20))
}

fn window(c: &Common, default: [f64; 4]) -> [f64; 4] {
    c.window.map(|w| w.0).unwrap_or(default)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Grid energies `E = eps (x + i y)`, rows of constant `Im`.
fn energies(w: [f64; 4], g: Grid, p: &ParamsBig, ctx: &PrecisionContext) -> Vec<CBig> {
    let mut out = Vec::new();
    for y in linspace(w[3], w[2], g.1) {
        for x in linspace(w[0], w[1], g.0) {
            let e = Complex::new(BigFloat::lift(x, ctx) * &p.epsilon, BigFloat::lift(y, ctx) * &p.epsilon);
            out.push(e);
        }
    }
    out
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> starklab::Result<()>) -> Run<Artifact> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(Artifact::Csv(buf))
}

fn simple_csv(header: &[&str], rows: Vec<Vec<String>>) -> Run<Artifact> {
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header).map_err(StarkError::from)?;
        for r in rows {
            w.write_record(r).map_err(StarkError::from)?;
        }
        w.flush()?;
        Ok(())
    })
}

/// CSV records as a JSON array of string-valued objects.
fn csv_to_json(bytes: &[u8]) -> Run<Value> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| Fail::Numeric(e.to_string()))?.clone();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Fail::Numeric(e.to_string()))?;
        let obj: serde_json::Map<String, Value> =
            header.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), Value::String(v.to_string()))).collect();
        rows.push(Value::Object(obj));
    }
    Ok(Value::Array(rows))
}

fn model_value(kind: ModelKind, e: &CBig, cubic: &InverseRCubic<BigFloat>, rational: Option<&RationalModel<BigFloat>>, p: &ParamsBig, ctx: &PrecisionContext) -> Run<ModelValue<BigFloat>> {
    Ok(match kind {
        ModelKind::Cubic => cubic.eval(e)?,
        ModelKind::Rational => rational.expect("rational model built").eval(e)?,
        ModelKind::OmegaZero => omega_zero_model(e, p, ctx)?.0,
    })
}

fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Cubic => "inverse_r_cubic",
        ModelKind::Rational => "rational_model",
        ModelKind::OmegaZero => "omega_zero_model",
    }
}

fn run(cli: &Cli) -> Run<(Artifact, Value)> {
    let c = &cli.common;
    let ctx = PrecisionContext::new(c.prec, tolerance(c))?;
    match &cli.cmd {
        Cmd::Sums { q, p } => {
            let t = sum_table::<BigFloat>(*q, *p, &ctx)?;
            Ok((csv_bytes(|b| t.write_csv(b))?, json!({"q": q, "p": p})))
        }
        Cmd::Census { q_max, sample_p } => {
            let mode = if *sample_p { CensusMode::SampleP } else { CensusMode::AllP };
            let r = support_census::<BigFloat>(*q_max, mode, &ctx)?;
            let cfg = json!({"q_max": q_max, "sample_p": sample_p});
            if c.format == Format::Json {
                return Ok((Artifact::Json(serde_json::to_value(&r).map_err(StarkError::from)?), cfg));
            }
            let rows = r
                .entries
                .iter()
                .map(|e| {
                    let ce: Vec<String> = e.counterexamples.iter().map(|m| m.to_string()).collect();
                    vec![e.q.to_string(), e.p.to_string(), e.support_size.to_string(), fmt_f64(e.ratio), ce.join(";")]
                })
                .collect();
            Ok((simple_csv(&["q", "p", "support_size", "ratio", "counterexamples"], rows)?, cfg))
        }
        Cmd::Pm { m } => {
            let p = params(c, &ctx)?;
            let mut rows = Vec::new();
            for &mi in &m.0 {
                let v = fourier_coeff_model(mi, &p, &ctx)?;
                let a = starklab::cplx::abs(&v.value);
                rows.push(vec![mi.to_string(), fmt_real(&v.value.re), fmt_real(&v.value.im), fmt_real(&a), fmt_real(&v.est_error)]);
            }
            Ok((simple_csv(&["m", "re_p", "im_p", "abs_p", "est_error"], rows)?, json!({"m": m.0})))
        }
        Cmd::Model { model, grid } => {
            let p = params(c, &ctx)?;
            let w = window(c, [0.0, 1.0, -2.0, 0.0]);
            let cubic = InverseRCubic::new(&p, &ctx);
            let rational = match model {
                ModelKind::Rational => Some(RationalModel::new(&p, &ctx)?),
                _ => None,
            };
            let es = energies(w, *grid, &p, &ctx);
            let rows = par_map(&es, |e| -> Run<GridRow<BigFloat>> {
                let v = model_value(*model, e, &cubic, rational.as_ref(), &p, &ctx)?;
                let pt = scaled_coords(e, &p, &ctx);
                Ok(GridRow { e: e.clone(), xi: pt.xi, rho: pt.rho, model_name: model_name(*model).to_string(), value: v })
            })
            .into_iter()
            .collect::<Run<Vec<_>>>()?;
            let cfg = json!({"model": model_name(*model), "window": w, "grid": [grid.0, grid.1]});
            Ok((csv_bytes(|b| write_grid_csv(&rows, b))?, cfg))
        }
        Cmd::Oracle { grid } => {
            let p = params(c, &ctx)?;
            let w = window(c, [0.0, 1.0, -0.5, 0.0]);
            let o = StarkOracle::new(PotentialSpec::default(), p.clone());
            let es = energies(w, *grid, &p, &ctx);
            let rows = par_map(&es, |e| o.connection_coeffs(e, &ctx)).into_iter().collect::<starklab::Result<Vec<_>>>()?;
            let cfg = json!({"window": w, "grid": [grid.0, grid.1], "oracle": o.config});
            Ok((csv_bytes(|b| write_oracle_csv(&rows, b))?, cfg))
        }
        Cmd::Fourier { m, eta, nodes } => {
            let p = params(c, &ctx)?;
            let o = StarkOracle::new(PotentialSpec::default(), p.clone());
            let samples = fourier::contour_samples(&o, *eta, *nodes, &ctx)?;
            let rows: Vec<FourierRow<BigFloat>> = fourier::coeffs_from_samples(&samples, &m.0, *eta, &ctx)
                .into_iter()
                .zip(&m.0)
                .map(|(v, &mi)| FourierRow { m: mi, eta: *eta, p: v })
                .collect();
            let cfg = json!({"m": m.0, "eta": eta, "nodes": nodes, "oracle": o.config});
            Ok((csv_bytes(|b| write_fourier_csv(&rows, b))?, cfg))
        }
        Cmd::Zeros { model, terms, max_depth, newton_tol } => {
            let p = params(c, &ctx)?;
            let w = window(c, [0.0, 1.0, -2.0, -1.0]);
            let (sr, si) = match model {
                ModelKind::Cubic => cubic_samples(-w[2], *terms),
                _ => exponential_samples(-w[2]),
            };
            let win = SearchWindow::new(w[0], w[1], w[2], w[3])?
                .with_depth(*max_depth)
                .with_newton_tol(*newton_tol)
                .with_samples(sr, si);
            let cubic = match terms {
                Some(n) => InverseRCubic::truncated(&p, &ctx, *n),
                None => InverseRCubic::new(&p, &ctx),
            };
            let rational = match model {
                ModelKind::Rational => Some(RationalModel::new(&p, &ctx)?),
                _ => None,
            };
            let f = |e: &CBig| -> starklab::Result<CBig> {
                match model_value(*model, e, &cubic, rational.as_ref(), &p, &ctx) {
                    Ok(v) => Ok(v.value),
                    Err(Fail::Usage(m)) => Err(StarkError::Domain(m)),
                    Err(Fail::Numeric(m)) => Err(StarkError::Precision(m)),
                }
            };
            let zs = find_zeros(&f, &win, &p, &ctx)?;
            if !zs.complete() {
                eprintln!("warning: {} zero(s) left in cells at the depth limit", zs.unresolved);
            }
            let tag = p.rational_tag;
            let rows: Vec<ZeroRow> = zs
                .zeros
                .iter()
                .map(|z| ZeroRow {
                    model: model_name(*model).to_string(),
                    eps: p.epsilon.to_f64(),
                    omega_p: tag.map(|t| t.p),
                    omega_q: tag.map(|t| t.q),
                    k_guess: None,
                    zero: *z,
                })
                .collect();
            let cfg = json!({
                "model": model_name(*model), "window": win, "terms": terms,
                "winding": zs.winding, "unresolved": zs.unresolved, "evaluations": zs.evaluations,
            });
            Ok((csv_bytes(|b| write_zeros_csv(&rows, b))?, cfg))
        }
        Cmd::Ladder { q, m1, m2, k, mode } => {
            let lm = match mode {
                Mode::Printed => LadderMode::Printed,
                Mode::Balanced => LadderMode::Balanced,
            };
            let mut pts = Vec::new();
            for &ki in &k.0 {
                if ki < 1 {
                    return usage("ladder indices start at 1");
                }
                pts.push(ladder_asymptote(ki as u64, *q, *m1, *m2, lm)?);
            }
            let cfg = json!({"q": q, "m1": m1, "m2": m2, "mode": lm});
            if c.format == Format::Json {
                return Ok((Artifact::Json(serde_json::to_value(&pts).map_err(StarkError::from)?), cfg));
            }
            let rows = pts
                .iter()
                .map(|l| vec![l.k.to_string(), fmt_f64(l.e_over_eps.re), fmt_f64(l.e_over_eps.im)])
                .collect();
            Ok((simple_csv(&["k", "re_E_over_eps", "im_E_over_eps"], rows)?, cfg))
        }
        Cmd::Count { y, localize } => {
            let p = params(c, &ctx)?;
            let mut counts = Vec::new();
            for &yi in &y.0 {
                counts.push(count_in_strip(&p, yi, &ctx)?);
            }
            let loc = match localize {
                Some(floor) => Some(verify_strip_localization(&p, &y.0, *floor, &ctx)?),
                None => None,
            };
            let cfg = json!({"y": y.0, "localize": localize});
            if c.format == Format::Json || loc.is_some() {
                let v = json!({"counts": counts, "localization": loc});
                return Ok((Artifact::Json(v), cfg));
            }
            let rows = counts
                .iter()
                .map(|r| vec![fmt_f64(r.y), r.n.to_string(), fmt_f64(r.log_pi_n_over_pi_y)])
                .collect();
            Ok((simple_csv(&["y", "n", "log_pi_n_over_pi_y"], rows)?, cfg))
        }
        Cmd::Compare { rational, depth, xi, m, eta, nodes } => match rational {
            Some(o) => {
                let p = epsilon_from_omega::<BigFloat>(o.p, o.q, o.n, &ctx)?;
                let cfg = RationalCompareConfig { depths: depth.0.clone(), xis: xi.0.clone(), ..Default::default() };
                let r = compare_rational(&p, &cfg, &ctx)?;
                let flag = if r.pass { "PASS" } else { "WARN" };
                let mut v = serde_json::to_value(&r).map_err(StarkError::from)?;
                v["flag"] = json!(flag);
                Ok((Artifact::Json(v), json!({"rational": [o.p, o.q, o.n], "config": cfg})))
            }
            None => {
                let p = params(c, &ctx)?;
                let r = compare_fourier(&p, *eta, *nodes, &m.0, &ctx)?;
                let flag = if r.pass { "PASS" } else { "WARN" };
                let mut v = serde_json::to_value(&r).map_err(StarkError::from)?;
                v["flag"] = json!(flag);
                Ok((Artifact::Json(v), json!({"m": m.0, "eta": eta, "nodes": nodes})))
            }
        },
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Sums { .. } => "sums",
        Cmd::Census { .. } => "census",
        Cmd::Pm { .. } => "pm",
        Cmd::Model { .. } => "model",
        Cmd::Oracle { .. } => "oracle",
        Cmd::Fourier { .. } => "fourier",
        Cmd::Zeros { .. } => "zeros",
        Cmd::Ladder { .. } => "ladder",
        Cmd::Count { .. } => "count",
        Cmd::Compare { .. } => "compare",
    }
}

fn emit(cli: &Cli, art: Artifact, cfg: Value) -> Run<()> {
    let c = &cli.common;
    let bytes = match (art, c.format) {
        (Artifact::Csv(b), Format::Csv) => b,
        (Artifact::Csv(b), Format::Json) => {
            let mut s = serde_json::to_vec_pretty(&csv_to_json(&b)?).map_err(StarkError::from)?;
            s.push(b'\n');
            s
        }
        (Artifact::Json(v), _) => {
            let mut s = serde_json::to_vec_pretty(&v).map_err(StarkError::from)?;
            s.push(b'\n');
            s
        }
    };
    let io = |e: std::io::Error| Fail::Numeric(e.to_string());
    match &c.out {
        None => std::io::stdout().write_all(&bytes).map_err(io)?,
        Some(path) => {
            File::create(path).and_then(|mut f| f.write_all(&bytes)).map_err(io)?;
            let mut params = cfg;
            params["eps"] = json!(c.eps);
            params["omega"] = json!(c.omega.map(|o| [o.p, o.q, o.n]));
            params["format"] = json!(format!("{:?}", c.format).to_lowercase());
            params["threads"] = json!(starklab::par::worker_count());
            Manifest::new(command_name(&cli.cmd), path, c.prec, tolerance(c), params).write_next_to(path)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = run(&cli).and_then(|(art, cfg)| emit(&cli, art, cfg));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(m)) => {
            eprintln!("starklab: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Numeric(m)) => {
            eprintln!("starklab: {m}");
            ExitCode::from(3)
        }
    }
}
