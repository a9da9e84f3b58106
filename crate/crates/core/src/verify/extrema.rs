//! Finite-range checks of the three extremal inequalities
//!
//! * `P_{q_n} > P_1`,
//! * `P_{q_n} <= P_N`,
//! * `P_N / N <= P_{q_{n+1}-1} / (q_{n+1} - 1)`,
//!
//! for `q_n <= N < q_{n+1}`, together with the mirror form of the third one.

use rayon::prelude::*;
use serde::Serialize;

use super::{MarginTracker, Scalar, VerificationReport};
use crate::accumulate::{CompensatedSum, PER_FACTOR_ERROR};
use crate::error::{Result, SudlerError};
use crate::phase::two_sin_abs;
use crate::quadratic::QuadraticParams;
use crate::sudler::{mirror_epsilons, mirror_product, sudler_product, SudlerSequence};

/// Location of the extreme values of `log P_N` on one window `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowExtremes {
    pub n: usize,
    pub lo: u64,
    pub hi: u64,
    pub argmin: u64,
    pub min_log: f64,
    pub argmax: u64,
    pub max_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremaReport {
    pub b: u32,
    pub n_max: usize,
    pub ineq1: VerificationReport,
    pub ineq2: VerificationReport,
    pub ineq3: VerificationReport,
    pub windows: Vec<WindowExtremes>,
}

impl ExtremaReport {
    pub fn reports(&self) -> [&VerificationReport; 3] {
        [&self.ineq1, &self.ineq2, &self.ineq3]
    }

    pub fn pass(&self) -> bool {
        self.reports().iter().all(|r| r.pass)
    }
}

struct WindowScan {
    extremes: WindowExtremes,
    ineq1: Option<f64>,
    ineq2: MarginTracker<u64>,
    ineq3: MarginTracker<u64>,
}

/// The inequalities are stated for the windows `n >= 1`.
fn first_window(_params: &QuadraticParams) -> usize {
    1
}

fn scan_window(params: &QuadraticParams, n: usize, log_p1: f64) -> Result<WindowScan> {
    let lo = params.q(n)?;
    let hi = params.q(n + 1)? - 1;
    let mut seq = SudlerSequence::range(params, lo, hi + 1)?;
    let (_, log_lo) = seq.next().expect("window is nonempty");
    let mut ext = WindowExtremes {
        n,
        lo,
        hi,
        argmin: lo,
        min_log: log_lo,
        argmax: lo,
        max_log: log_lo,
    };
    let mut ineq2 = MarginTracker::new();
    // Largest log(P_N / N) over lo <= N < hi.
    let mut best_ratio = (log_lo - (lo as f64).ln(), lo);
    let mut log_hi = log_lo;
    for (big_n, log) in seq {
        if log < ext.min_log {
            ext.min_log = log;
            ext.argmin = big_n;
        }
        if log > ext.max_log {
            ext.max_log = log;
            ext.argmax = big_n;
        }
        ineq2.observe(log - log_lo, big_n);
        if big_n < hi {
            let r = log - (big_n as f64).ln();
            if r > best_ratio.0 {
                best_ratio = (r, big_n);
            }
        }
        log_hi = log;
    }
    let mut ineq3 = MarginTracker::new();
    if hi > lo {
        ineq3.observe(log_hi - (hi as f64).ln() - best_ratio.0, best_ratio.1);
    }
    let ineq1 = (lo > 1).then_some(log_lo - log_p1);
    Ok(WindowScan {
        extremes: ext,
        ineq1,
        ineq2,
        ineq3,
    })
}

/// Checks the three inequalities for every `N` with `1 <= N < q_{n_max+1}`.
///
/// Trivial equalities are left out: `N = q_n` in the second inequality, `N =
/// q_{n+1} - 1` in the third, and for `b = 1` the first inequality at `q_1 = 1`.
/// Windows are scanned independently, each from a directly evaluated seed, so the
/// result does not depend on `threads`.
pub fn verify_extrema(params: &QuadraticParams, n_max: usize, threads: usize) -> Result<ExtremaReport> {
    let b = params.b();
    let end = params.q(n_max + 1)?;
    let log_p1 = sudler_product(params, 1)?.log_value;
    let windows: Vec<usize> = (first_window(params)..=n_max).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| SudlerError::Config(e.to_string()))?;
    let scans: Vec<WindowScan> = pool.install(|| {
        windows
            .par_iter()
            .map(|&n| scan_window(params, n, log_p1))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut ineq1 = MarginTracker::new();
    let mut ineq2 = MarginTracker::new();
    let mut ineq3 = MarginTracker::new();
    for s in &scans {
        if let Some(m) = s.ineq1 {
            ineq1.observe(m, s.extremes.lo);
        }
        ineq2.merge(&s.ineq2);
        ineq3.merge(&s.ineq3);
    }
    let budget = 2.0 * (end - 1) as f64 * PER_FACTOR_ERROR;
    let range = || [Scalar::from(1u64), Scalar::from(end - 1)];
    let report = |id: &str, t: &MarginTracker<u64>| {
        VerificationReport::from_margin(
            id,
            b,
            range(),
            t.min,
            t.at.map_or(Scalar::Text("none".into()), Scalar::from),
            budget,
        )
    };
    let out = ExtremaReport {
        b,
        n_max,
        ineq1: report("ineq1", &ineq1),
        ineq2: report("ineq2", &ineq2),
        ineq3: report("ineq3", &ineq3),
        windows: scans.into_iter().map(|s| s.extremes).collect(),
    };
    if let Some(r) = out.reports().into_iter().find(|r| r.is_ambiguous()) {
        return Err(SudlerError::PrecisionFault(format!(
            "{}: margin {:e} at N = {} is within the error budget {:e}",
            r.check_id, r.min_margin, r.margin_at, r.fp_error_budget
        )));
    }
    Ok(out)
}

/// One `N` at which an inequality fails, with its log-domain margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub check_id: &'static str,
    pub n: usize,
    pub big_n: u64,
    pub margin: f64,
}

/// Every `N < q_{n_max+1}` at which one of the three inequalities fails by more than
/// the error budget.
pub fn list_violations(params: &QuadraticParams, n_max: usize) -> Result<Vec<Violation>> {
    let end = params.q(n_max + 1)?;
    let budget = 2.0 * (end - 1) as f64 * PER_FACTOR_ERROR;
    let log_p1 = sudler_product(params, 1)?.log_value;
    let mut out = Vec::new();
    for n in first_window(params)..=n_max {
        let lo = params.q(n)?;
        let hi = params.q(n + 1)? - 1;
        let rows: Vec<(u64, f64)> = SudlerSequence::range(params, lo, hi + 1)?.collect();
        let log_lo = rows[0].1;
        let log_hi = rows[rows.len() - 1].1;
        let mut push = |check_id, big_n, margin: f64| {
            if margin < -budget {
                out.push(Violation { check_id, n, big_n, margin });
            }
        };
        if lo > 1 {
            push("ineq1", lo, log_lo - log_p1);
        }
        for &(big_n, log) in &rows[1..] {
            push("ineq2", big_n, log - log_lo);
        }
        let cap = log_hi - (hi as f64).ln();
        for &(big_n, log) in &rows[..rows.len() - 1] {
            push("ineq3", big_n, cap - (log - (big_n as f64).ln()));
        }
    }
    Ok(out)
}

/// Per-window extremes of a dataset of `(N, log P_N)` rows sorted by `N`, for every
/// window `[q_n, q_{n+1} - 1]` the dataset covers completely.
pub fn window_extremes(params: &QuadraticParams, rows: &[(u64, f64)]) -> Result<Vec<WindowExtremes>> {
    let (Some(&(first, _)), Some(&(last, _))) = (rows.first(), rows.last()) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut n = first_window(params);
    loop {
        let lo = params.q(n)?;
        let hi = params.q(n + 1)? - 1;
        if hi > last {
            break;
        }
        if lo >= first {
            let window = rows.iter().filter(|(m, _)| (lo..=hi).contains(m));
            let mut ext: Option<WindowExtremes> = None;
            for &(m, v) in window {
                let e = ext.get_or_insert(WindowExtremes {
                    n,
                    lo,
                    hi,
                    argmin: m,
                    min_log: v,
                    argmax: m,
                    max_log: v,
                });
                if v < e.min_log {
                    e.min_log = v;
                    e.argmin = m;
                }
                if v > e.max_log {
                    e.max_log = v;
                    e.argmax = m;
                }
            }
            out.extend(ext);
        }
        n += 1;
    }
    Ok(out)
}

/// `(F_{n+1} - 1)/N <= F_{n+1}/F_n <= 1.67` for `F_n <= N < F_{n+1}` and Fibonacci
/// indices `n` in `n_lo..=n_hi` with `n_lo >= 8`, where `F_n = q_{n-1}` for `b = 1`.
pub fn growth_ratio_check(n_lo: usize, n_hi: usize) -> Result<VerificationReport> {
    if n_lo < 8 || n_hi < n_lo {
        return Err(SudlerError::Domain(format!(
            "growth ratio check needs 8 <= n_lo <= n_hi, got {n_lo}..={n_hi}"
        )));
    }
    let params = QuadraticParams::new(1)?;
    let fib = |n: usize| params.q(n - 1);
    let mut margin = MarginTracker::new();
    for n in n_lo..=n_hi {
        let (f_n, f_next) = (fib(n)?, fib(n + 1)?);
        let ratio = f_next as f64 / f_n as f64;
        margin.observe(1.67 - ratio, format!("n={n}"));
        // (F_{n+1} - 1)/N decreases in N, so N = F_n is the worst case.
        margin.observe(ratio - (f_next - 1) as f64 / f_n as f64, format!("n={n},N={f_n}"));
    }
    Ok(VerificationReport::from_margin(
        "growth_ratio",
        1,
        [Scalar::from(n_lo), Scalar::from(n_hi)],
        margin.min,
        margin.at.map_or(Scalar::from("none"), Scalar::Text),
        1e-14,
    ))
}

/// `F_{n+1} / F_n` for a Fibonacci index `n >= 2`.
pub fn fibonacci_ratio(n: usize) -> Result<f64> {
    let params = QuadraticParams::new(1)?;
    Ok(params.q(n)? as f64 / params.q(n - 1)? as f64)
}

fn sample_window(lo: u64, hi: u64, samples: usize) -> Vec<u64> {
    let width = hi - lo;
    if samples < 2 || width < samples as u64 {
        return (lo..=hi).collect();
    }
    let mut v: Vec<u64> = (0..samples)
        .map(|j| lo + (width as u128 * j as u128 / (samples as u128 - 1)) as u64)
        .collect();
    v.dedup();
    v
}

/// The mirror identity `P_N = P_{q_{n+1}-1} / prod_{l=1}^{L} 2|sin(pi(l beta + (-beta)^(n+2)))|`,
/// `L = q_{n+1} - N - 1`, and the agreement of that short product with its perturbed
/// block decomposition, on `samples` evenly spread `N` per window.
///
/// The margin is `tolerance - |deviation|` in the log domain.
pub fn mirror_identity_check(
    params: &QuadraticParams,
    n_max: usize,
    samples: usize,
    tolerance: f64,
) -> Result<VerificationReport> {
    let mut margin = MarginTracker::new();
    for n in first_window(params)..=n_max {
        let lo = params.q(n)?;
        let top = params.q(n + 1)? - 1;
        let log_top = sudler_product(params, top)?.log_value;
        let points = sample_window(lo, top, samples);
        let devs = points
            .par_iter()
            .map(|&big_n| -> Result<(f64, u64)> {
                let log_n = sudler_product(params, big_n)?.log_value;
                let m = mirror_epsilons(params, n, big_n)?;
                let direct = mirror_product(params, n, m.remainder)?.log_value;
                let decomposed = m.product(params)?.log_value;
                let dev = (log_top - log_n - direct).abs().max((direct - decomposed).abs());
                Ok((dev, big_n))
            })
            .collect::<Result<Vec<_>>>()?;
        for (dev, big_n) in devs {
            margin.observe(tolerance - dev, format!("n={n},N={big_n}"));
        }
    }
    Ok(VerificationReport::from_margin(
        "mirror_identity",
        params.b(),
        [Scalar::from(params.q(first_window(params))?), Scalar::from(params.q(n_max + 1)? - 1)],
        margin.min,
        margin.at.map_or(Scalar::from("none"), Scalar::Text),
        0.0,
    ))
}

/// The third inequality in mirror form: for every `q_n <= N < q_{n+1} - 1`,
/// `log prod_{l=1}^{L} 2|sin(pi(l beta + (-beta)^(n+2)))| >= log((q_{n+1} - 1)/N)`.
///
/// The shift is fixed within a window, so one pass over `l` covers all `N`.
pub fn mirror_ineq3_check(params: &QuadraticParams, n_lo: usize, n_hi: usize) -> Result<VerificationReport> {
    let mut margin = MarginTracker::new();
    let mut budget: f64 = 0.0;
    for n in n_lo.max(first_window(params))..=n_hi {
        let lo = params.q(n)?;
        let top = params.q(n + 1)? - 1;
        let shift = -params.phase(top + 1);
        let step = params.beta();
        let mut phase = shift;
        let mut log = CompensatedSum::new();
        for l in 1..=(top - lo) {
            phase += step;
            log.add(two_sin_abs(phase).ln());
            let big_n = top - l;
            margin.observe(log.value() - (top as f64 / big_n as f64).ln(), big_n);
        }
        budget = budget.max(2.0 * (top - lo) as f64 * PER_FACTOR_ERROR);
    }
    Ok(VerificationReport::from_margin(
        "mirror_ineq3",
        params.b(),
        [Scalar::from(params.q(n_lo)?), Scalar::from(params.q(n_hi + 1)? - 1)],
        margin.min,
        margin.at.map_or(Scalar::from("none"), Scalar::from),
        budget,
    ))
}

/// Comparison of `P_N / N` at `N = q_n + q_{n-1}` with `P_{q_n} / q_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReflectionProbe {
    pub n: usize,
    pub big_n: u64,
    pub log_ratio_n: f64,
    pub log_ratio_qn: f64,
    /// Whether `P_N / N < P_{q_n} / q_n`.
    pub below: bool,
}

/// Reports, without asserting anything, whether `P_N / N` drops below
/// `P_{q_n} / q_n` at `N = q_n + q_{n-1}`.
pub fn reflection_probe(params: &QuadraticParams, n_range: std::ops::RangeInclusive<usize>) -> Result<Vec<ReflectionProbe>> {
    n_range
        .filter(|&n| n >= 1)
        .map(|n| {
            let qn = params.q(n)?;
            let big_n = qn + params.q(n - 1)?;
            let log_ratio_n = sudler_product(params, big_n)?.log_value - (big_n as f64).ln();
            let log_ratio_qn = sudler_product(params, qn)?.log_value - (qn as f64).ln();
            Ok(ReflectionProbe {
                n,
                big_n,
                log_ratio_n,
                log_ratio_qn,
                below: log_ratio_n < log_ratio_qn,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_small_range_passes() {
        let p = QuadraticParams::new(1).unwrap();
        // q_7 = F_8 = 21
        let r = verify_extrema(&p, 6, 1).unwrap();
        assert_eq!(r.ineq1.range[1], Scalar::Int(20));
        assert!(r.pass(), "{r:#?}");
    }

    #[test]
    fn thread_count_does_not_change_reports() {
        let p = QuadraticParams::new(2).unwrap();
        let a = verify_extrema(&p, 7, 1).unwrap();
        let b = verify_extrema(&p, 7, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn golden_windows_peak_and_dip_at_the_ends() {
        let p = QuadraticParams::new(1).unwrap();
        let r = verify_extrema(&p, 12, 1).unwrap();
        for w in &r.windows {
            assert_eq!((w.argmin, w.argmax), (w.lo, w.hi), "{w:?}");
        }
    }

    #[test]
    fn window_extremes_matches_sweep() {
        let p = QuadraticParams::new(1).unwrap();
        let rows: Vec<(u64, f64)> = crate::sudler::sudler_sequence(&p, 376).unwrap().collect();
        let w = window_extremes(&p, &rows).unwrap();
        assert_eq!(w.last().unwrap().lo, 233);
        assert_eq!(w.last().unwrap().hi, 376);
        let r = verify_extrema(&p, 12, 1).unwrap();
        assert_eq!(w.len(), r.windows.len());
        for (a, b) in w.iter().zip(&r.windows) {
            assert_eq!((a.argmin, a.argmax), (b.argmin, b.argmax));
        }
    }

    #[test]
    fn growth_ratio_examples() {
        assert!((fibonacci_ratio(8).unwrap() - 34.0 / 21.0).abs() < 1e-15);
        assert!((fibonacci_ratio(7).unwrap() - 21.0 / 13.0).abs() < 1e-15);
        assert!(fibonacci_ratio(7).unwrap() <= 1.67);
        let r = growth_ratio_check(8, 40).unwrap();
        assert!(r.pass);
        assert!(growth_ratio_check(7, 9).is_err());
        let phi_inv = (5f64.sqrt() + 1.0) / 2.0;
        assert!((fibonacci_ratio(60).unwrap() - phi_inv).abs() < 1e-12);
    }

    #[test]
    fn mirror_forms() {
        let p = QuadraticParams::new(1).unwrap();
        assert!(mirror_identity_check(&p, 10, 12, 1e-8).unwrap().pass);
        let m = mirror_ineq3_check(&p, 1, 14).unwrap();
        assert!(m.pass, "{m:?}");
        let ext = verify_extrema(&p, 14, 1).unwrap();
        assert!(ext.ineq3.pass);
    }

    #[test]
    fn reflection_probe_reports_both_ratios() {
        let p = QuadraticParams::new(5).unwrap();
        let probes = reflection_probe(&p, 1..=6).unwrap();
        assert_eq!(probes.len(), 6);
        assert_eq!(probes[0].big_n, 6);
        for pr in &probes {
            assert_eq!(pr.below, pr.log_ratio_n < pr.log_ratio_qn);
        }
    }
}
