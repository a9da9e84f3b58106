//! `sudler`: compute Sudler products, run verification checks and emit datasets.
//!
//! Exit status: 0 on success with every check passing, 1 when a check fails or a
//! computation or I/O step errors, 2 for invalid usage.

mod output;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sudler::envelope::{Envelope, EnvelopeConfig};
use sudler::figures::{figure, Dataset};
use sudler::limit::{compute_c_b, default_probe_index, g_truncated, DEFAULT_T};
use sudler::verify::{
    check_lemma7, check_lemma8, convergence_probe, growth_ratio_check, list_violations,
    mirror_identity_check, mirror_ineq3_check, proof_constants, reproduce_tables, sample_cases, verify_extrema, CaseBounds,
    Scalar, TableValues, VerificationReport,
};
use sudler::{decompose, evaluate, expand, sudler_product, OstrowskiExpansion, QuadraticParams, ShiftedCache, SudlerError, SudlerSequence};

use output::real;

#[derive(Parser, Debug)]
#[command(name = "sudler", version, about = "Sudler products for the quadratic irrationals [0; b, b, ...]")]
struct Cli {
    /// Worker threads for sweeps and envelope evaluations.
    #[arg(long, global = true, env = "SUDLER_THREADS", default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    /// The three extremal inequalities over every N below q_Q.
    Extrema,
    /// Mirror identity and the mirror form of the third inequality.
    Mirror,
    /// Fibonacci growth ratio (b = 1).
    Growth,
    /// Case analysis on random N with n >= 6 (b = 5).
    Cases,
    /// Recomputed table bounds (b = 5).
    Tables,
    Lemma7,
    Lemma8,
    /// Explicit constants and their ceilings.
    Constants,
    /// Convergence-rate probe (report only, never fails).
    Convergence,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// P_N for one N.
    Compute {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// P_N for every N in FROM..=TO as CSV (N,P_N,log_P_N).
    Sweep {
        #[arg(long)]
        b: u32,
        #[arg(long, default_value_t = 1)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shifted-block decomposition of P_N.
    Decompose {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        n: u64,
    },
    /// Ostrowski digits of N, or the value of given digits.
    Ostrowski {
        #[arg(long)]
        b: u32,
        #[arg(long, required_unless_present = "digits", conflicts_with = "digits")]
        n: Option<u64>,
        /// Comma-separated digits b_1,b_2,...
        #[arg(long, value_delimiter = ',')]
        digits: Option<Vec<u32>>,
    },
    /// Truncated limit function G_T(eps), or the constant C_b.
    #[command(allow_negative_numbers = true)]
    Limit {
        #[arg(long)]
        b: u32,
        #[arg(long = "T", default_value_t = DEFAULT_T)]
        t: u64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Compute C_b by two routes instead.
        #[arg(long)]
        constant: bool,
        /// Block index for the shifted-product route of C_b.
        #[arg(long)]
        k_probe: Option<usize>,
    },
    /// Envelopes P, P* and G_T at one eps or on a grid (CSV eps,P,P_star,G_T).
    #[command(allow_negative_numbers = true)]
    Envelope {
        #[arg(long)]
        b: u32,
        #[arg(long = "K0")]
        k0: Option<usize>,
        #[arg(long = "T")]
        t: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long, default_value_t = 61)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verification checks, reported as JSON.
    Verify {
        #[arg(long, default_value_t = 1)]
        b: u32,
        #[arg(long, value_enum, default_value_t = Check::Extrema)]
        check: Check,
        /// Cover every N < q_Q (extrema) or the windows n < Q (mirror).
        #[arg(long)]
        through_q: Option<usize>,
        /// Sample count for random checks.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use the printed table entries as case bounds instead of recomputed ones.
        #[arg(long)]
        printed: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute every table bound for b = 5.
    Tables {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Figure datasets (CSV, optionally SVG).
    Figures {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=5))]
        id: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Grid size for the envelope figures 4 and 5.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Explicit constants of the convergence estimate.
    Constants {
        #[arg(long)]
        b: u32,
    },
}

fn params(b: u32) -> Result<QuadraticParams> {
    Ok(QuadraticParams::new(b)?)
}

#[derive(Serialize)]
struct ComputeOut {
    b: u32,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "P_N")]
    p_n: f64,
    #[serde(rename = "log_P_N")]
    log_p_n: f64,
    error_bound: f64,
}

fn compute(b: u32, n: u64, format: Format) -> Result<bool> {
    let v = sudler_product(&params(b)?, n)?;
    let mut out = output::sink(None)?;
    match format {
        Format::Text => writeln!(out, "{}", real(v.value()))?,
        Format::Csv => output::csv(&mut *out, &["N", "P_N", "log_P_N"], [vec![n.to_string(), real(v.value()), real(v.log_value)]])?,
        Format::Json => output::json(
            &mut *out,
            &ComputeOut { b, n, p_n: v.value(), log_p_n: v.log_value, error_bound: v.error_bound },
        )?,
    }
    Ok(true)
}

fn sweep(b: u32, from: u64, to: u64, format: Format, path: Option<PathBuf>) -> Result<bool> {
    if from > to {
        return Err(SudlerError::Domain(format!("empty range {from}..={to}")).into());
    }
    let p = params(b)?;
    let rows = SudlerSequence::range(&p, from, to + 1)?;
    let mut out = output::sink(path.as_deref())?;
    match format {
        Format::Json => {
            let v: Vec<ComputeOut> = rows
                .map(|(n, l)| ComputeOut { b, n, p_n: l.exp(), log_p_n: l, error_bound: n as f64 * 2f64.powi(-50) })
                .collect();
            output::json(&mut *out, &v)?;
        }
        _ => output::csv(
            &mut *out,
            &["N", "P_N", "log_P_N"],
            rows.map(|(n, l)| vec![n.to_string(), real(l.exp()), real(l)]),
        )?,
    }
    Ok(true)
}

#[derive(Serialize)]
struct DecomposeOut {
    b: u32,
    #[serde(rename = "N")]
    n: u64,
    top: usize,
    digits: Vec<u32>,
    terms: Vec<sudler::ShiftedTerm>,
    log_product: f64,
    log_direct: f64,
}

fn decompose_cmd(b: u32, n: u64) -> Result<bool> {
    let p = params(b)?;
    let d = decompose(&p, n)?;
    let log_product = d.product(&p)?.log_value;
    let log_direct = sudler_product(&p, n)?.log_value;
    let out = DecomposeOut {
        b,
        n,
        top: d.top,
        digits: d.expansion.digits.clone(),
        terms: d.terms,
        log_product,
        log_direct,
    };
    output::json(&mut *output::sink(None)?, &out)?;
    Ok(true)
}

#[derive(Serialize)]
struct OstrowskiOut {
    b: u32,
    #[serde(rename = "N")]
    n: Option<u64>,
    digits: Vec<u32>,
    valid: bool,
    violation: Option<String>,
}

fn ostrowski(b: u32, n: Option<u64>, digits: Option<Vec<u32>>) -> Result<bool> {
    params(b)?;
    let e = match (n, digits) {
        (Some(n), _) => expand(n, b)?,
        (None, Some(d)) => OstrowskiExpansion::new(b, d),
        (None, None) => unreachable!("clap requires one of --n and --digits"),
    };
    let violation = e.validate().err().map(|v| v.to_string());
    let value = if violation.is_none() { Some(evaluate(&e)?) } else { None };
    let out = OstrowskiOut { b, n: value, valid: violation.is_none(), digits: e.digits, violation };
    output::json(&mut *output::sink(None)?, &out)?;
    match out.violation {
        Some(v) => Err(SudlerError::InvalidDigits(v).into()),
        None => Ok(true),
    }
}

fn limit(b: u32, t: u64, eps: f64, constant: bool, k_probe: Option<usize>) -> Result<bool> {
    let p = params(b)?;
    let mut out = output::sink(None)?;
    if constant {
        let k = k_probe.unwrap_or_else(|| default_probe_index(&p));
        output::json(&mut *out, &compute_c_b(&p, t, k)?)?;
    } else {
        output::json(&mut *out, &g_truncated(&p, t, eps)?)?;
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn envelope(
    b: u32,
    k0: Option<usize>,
    t: Option<u64>,
    eps: Option<f64>,
    from: Option<f64>,
    to: Option<f64>,
    points: usize,
    format: Format,
    path: Option<PathBuf>,
) -> Result<bool> {
    let mut cfg = EnvelopeConfig::for_base(b)?;
    if let Some(k0) = k0 {
        cfg.k0 = k0;
    }
    if let Some(t) = t {
        cfg.t = t;
    }
    let env = Envelope::new(cfg)?;
    let grid: Vec<f64> = match eps {
        Some(e) => vec![e],
        None => {
            let (lo, hi) = (from.unwrap_or(cfg.interval.0), to.unwrap_or(cfg.interval.1));
            if points < 2 || !(lo < hi) {
                return Err(SudlerError::Domain(format!("need --points >= 2 and --from < --to, got {points} on [{lo}, {hi}]")).into());
            }
            (0..points).map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64).collect()
        }
    };
    let values = grid.iter().map(|&e| env.eval(e)).collect::<sudler::Result<Vec<_>>>()?;
    let mut out = output::sink(path.as_deref())?;
    match format {
        Format::Json => output::json(&mut *out, &values)?,
        _ => output::csv(
            &mut *out,
            &["eps", "P", "P_star", "G_T"],
            values.iter().map(|v| vec![real(v.epsilon), real(v.p), real(v.p_star), real(v.g_t)]),
        )?,
    }
    Ok(true)
}

/// Default `Q` for `--through-q`: every N below 21 for b = 1 and below q_6 otherwise.
fn default_through_q(b: u32) -> usize {
    if b == 1 {
        7
    } else {
        6
    }
}

fn cases_report(b: u32, samples: usize, seed: u64, printed: bool) -> Result<VerificationReport> {
    let p = params(b)?;
    if b != 5 {
        return Err(SudlerError::Domain("the case analysis is for b = 5".into()).into());
    }
    let values = if printed { TableValues::printed() } else { reproduce_tables()?.values };
    let mut cache = ShiftedCache::new(p);
    Ok(sample_cases(&mut cache, &CaseBounds::new(values), samples, seed)?)
}

fn verify(
    b: u32,
    check: Check,
    through_q: Option<usize>,
    samples: Option<usize>,
    seed: u64,
    printed: bool,
    threads: usize,
) -> Result<Vec<VerificationReport>> {
    let q_top = through_q.unwrap_or_else(|| default_through_q(b));
    if q_top < 2 {
        return Err(SudlerError::Domain("--through-q must be at least 2".into()).into());
    }
    let n_max = q_top - 1;
    let p = params(b)?;
    let mut reports = Vec::new();
    let want = |c: Check| check == c || check == Check::All;
    let all = check == Check::All;
    if want(Check::Extrema) {
        let r = verify_extrema(&p, n_max, threads)?;
        if !r.pass() {
            for v in list_violations(&p, n_max)? {
                eprintln!("{} fails at N = {} (window n = {}), log margin {}", v.check_id, v.big_n, v.n, real(v.margin));
            }
        }
        reports.extend(r.reports().into_iter().cloned());
    }
    if want(Check::Mirror) {
        reports.push(mirror_identity_check(&p, n_max, samples.unwrap_or(4), 1e-8)?);
        reports.push(mirror_ineq3_check(&p, 1, n_max)?);
    }
    if want(Check::Growth) && (b == 1 || !all) {
        if b != 1 {
            return Err(SudlerError::Domain("the growth-ratio check is for b = 1".into()).into());
        }
        reports.push(growth_ratio_check(8, n_max.max(8))?);
    }
    if want(Check::Cases) && (b == 5 || !all) {
        reports.push(cases_report(b, samples.unwrap_or(1000), seed, printed)?);
    }
    if want(Check::Tables) && (b == 5 || !all) {
        if b != 5 {
            return Err(SudlerError::Domain("the tables are for b = 5".into()).into());
        }
        reports.extend(reproduce_tables()?.cells.into_iter().map(|c| c.report));
    }
    if want(Check::Lemma7) {
        reports.push(check_lemma7(samples.unwrap_or(100_000), seed));
    }
    if want(Check::Lemma8) {
        reports.push(check_lemma8(samples.unwrap_or(100_000), seed));
    }
    if want(Check::Constants) && (matches!(b, 1 | 5) || !all) {
        reports.extend(proof_constants(b)?.reports);
    }
    if want(Check::Convergence) && (matches!(b, 1 | 5) || !all) {
        let ks = if b == 1 { 2..=18 } else { 1..=5 };
        let probe = convergence_probe(b, ks, 41)?;
        eprintln!("convergence probe b = {b}: fitted c = {}, monotone = {}", real(probe.fitted_c), probe.monotone);
        let last = probe.deviations.last().copied().unwrap_or(f64::NAN);
        let range = [Scalar::from(probe.ks[0]), Scalar::from(*probe.ks.last().unwrap())];
        let mut r = VerificationReport::from_margin("convergence", b, range, probe.fitted_c, Scalar::from(last), 0.0);
        // Report only.
        r.pass = true;
        reports.push(r);
    }
    Ok(reports)
}

fn tables(format: Format, path: Option<PathBuf>) -> Result<bool> {
    let r = reproduce_tables()?;
    let mut out = output::sink(path.as_deref())?;
    match format {
        Format::Json => output::json(&mut *out, &r.cells)?,
        _ => output::csv(
            &mut *out,
            &["id", "printed", "computed", "interval_lo", "interval_hi", "pass"],
            r.cells.iter().map(|c| {
                let (a, b) = c.interval.map_or((String::new(), String::new()), |(a, b)| (real(a), real(b)));
                vec![c.id.clone(), real(c.printed), real(c.computed), a, b, c.report.pass.to_string()]
            }),
        )?,
    }
    Ok(r.pass())
}

fn figures(id: u32, path: Option<PathBuf>, svg_path: Option<PathBuf>, points: Option<usize>) -> Result<bool> {
    let f = figure(id, points)?;
    let mut out = output::sink(path.as_deref())?;
    let series = match &f.dataset {
        Dataset::Sequence(rows) => {
            if f.multi_base {
                output::csv(
                    &mut *out,
                    &["b", "N", "logP"],
                    rows.iter().map(|r| vec![r.b.to_string(), r.n.to_string(), real(r.log_p)]),
                )?;
            } else {
                output::csv(&mut *out, &["N", "logP"], rows.iter().map(|r| vec![r.n.to_string(), real(r.log_p)]))?;
            }
            let mut bases: Vec<u32> = rows.iter().map(|r| r.b).collect();
            bases.dedup();
            bases
                .into_iter()
                .map(|b| svg::Series {
                    name: format!("b = {b}"),
                    points: rows.iter().filter(|r| r.b == b).map(|r| (r.n as f64, r.log_p)).collect(),
                })
                .collect::<Vec<_>>()
        }
        Dataset::Envelope(rows) => {
            output::csv(
                &mut *out,
                &["eps", "P", "P_star", "G_T"],
                rows.iter().map(|r| vec![real(r.eps), real(r.p), real(r.p_star), real(r.g_t)]),
            )?;
            let pick = |name: &str, f: fn(&sudler::figures::EnvelopeRow) -> f64| svg::Series {
                name: name.into(),
                points: rows.iter().map(|r| (r.eps, f(r))).collect(),
            };
            vec![pick("P", |r| r.p), pick("P*", |r| r.p_star), pick("G_T", |r| r.g_t)]
        }
    };
    if let Some(p) = svg_path {
        let (x, y) = match f.dataset {
            Dataset::Sequence(_) => ("N", "log P_N"),
            Dataset::Envelope(_) => ("eps", "value"),
        };
        std::fs::write(&p, svg::line_chart(f.title, x, y, &series)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let threads = cli.threads.max(1);
    // Envelope evaluations use the global pool; ignore a pool that is already set.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    match cli.command {
        Command::Compute { b, n, format } => compute(b, n, format),
        Command::Sweep { b, from, to, format, out } => sweep(b, from, to, format, out),
        Command::Decompose { b, n } => decompose_cmd(b, n),
        Command::Ostrowski { b, n, digits } => ostrowski(b, n, digits),
        Command::Limit { b, t, eps, constant, k_probe } => limit(b, t, eps, constant, k_probe),
        Command::Envelope { b, k0, t, eps, from, to, points, format, out } => {
            envelope(b, k0, t, eps, from, to, points, format, out)
        }
        Command::Verify { b, check, through_q, samples, seed, printed, out } => {
            let reports = verify(b, check, through_q, samples, seed, printed, threads)?;
            output::json(&mut *output::sink(out.as_deref())?, &reports)?;
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::Tables { format, out } => tables(format, out),
        Command::Figures { id, out, svg, points } => figures(id, out, svg, points),
        Command::Constants { b } => {
            let c = proof_constants(b)?;
            output::json(&mut *output::sink(None)?, &c)?;
            Ok(c.pass())
        }
    }
}

/// Invalid input values count as usage errors.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<SudlerError>() {
        Some(SudlerError::InvalidBase(_) | SudlerError::InvalidDigits(_) | SudlerError::Domain(_) | SudlerError::Config(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
