//! Sampled checks of the product and sine-ratio inequalities behind the quantitative
//! convergence estimate, its explicit constants, and a convergence-rate probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{MarginTracker, Scalar, VerificationReport};
use crate::envelope::EnvelopeConfig;
use crate::error::{Result, SudlerError};
use crate::limit::{g_truncated, DEFAULT_T};
use crate::quadratic::QuadraticParams;
use crate::sudler::shifted_product;

/// `psi(t) = t^(2/3) log^(1/3) t`, the cut-off between the small and large factors.
pub fn psi(t: f64) -> f64 {
    t.powf(2.0 / 3.0) * t.ln().cbrt()
}

/// Relative slack granted to each sampled inequality.
const SAMPLE_TOLERANCE: f64 = 1e-14;

fn product(a: &[f64], sign: f64) -> f64 {
    a.iter().map(|x| (sign * x).ln_1p()).sum::<f64>().exp()
}

/// Random sequence length between 1 and 200.
fn length(rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(1..=200)
}

/// A scale drawn log-uniformly from `[1e-6, 1]`.
fn log_scale(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(-6.0..=0.0))
}

/// Samples the three product bounds `n_samples` times each.
///
/// * (i) `prod_{n=N}^M (1 + a_n) >= 1 - (|sum a_n| + C^2/(N-1))` for `|a_n| <= min(1/2, C/n)`.
/// * (ii) `prod (1 + a_n) <= 1 + (1 + c)|sum a_n|` for `|a_n| <= 1/2`, `|sum a_n| <= c <= 1/2`.
/// * (iii) `prod (1 - a_n) >= 1 - 2 sum a_n` for `0 < a_n < 1/2`.
///
/// The margin is the smallest `lhs - rhs` (or `rhs - lhs` for the upper bound).
pub fn check_lemma7(n_samples: usize, seed: u64) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = MarginTracker::new();
    let mut a = Vec::new();
    for s in 0..n_samples {
        // (i)
        let start: usize = rng.random_range(2..=60);
        let c: f64 = rng.random_range(0.0..=3.0) * log_scale(&mut rng);
        let len = length(&mut rng);
        a.clear();
        a.extend((start..start + len).map(|n| {
            let cap = (c / n as f64).min(0.5);
            rng.random_range(-cap..=cap)
        }));
        let sum: f64 = a.iter().sum();
        let lhs = product(&a, 1.0);
        let rhs = 1.0 - (sum.abs() + c * c / (start - 1) as f64);
        tracker.observe(lhs - rhs + SAMPLE_TOLERANCE, format!("i:{s}"));

        // (ii): scale a random sequence so that its sum stays below 1/2.
        let len = length(&mut rng);
        let scale = log_scale(&mut rng) * 0.5;
        a.clear();
        a.extend((0..len).map(|_| rng.random_range(-scale..=scale)));
        let raw: f64 = a.iter().sum();
        let target = rng.random_range(0.0..0.5);
        if raw.abs() > target && raw != 0.0 {
            let f = target / raw.abs();
            a.iter_mut().for_each(|x| *x *= f);
        }
        let sum: f64 = a.iter().sum();
        let c = rng.random_range(sum.abs()..=0.5);
        let lhs = product(&a, 1.0);
        let rhs = 1.0 + (1.0 + c) * sum.abs();
        tracker.observe(rhs - lhs + SAMPLE_TOLERANCE * rhs, format!("ii:{s}"));

        // (iii): short sequences so that the bound is not trivially negative.
        let len = rng.random_range(1..=8);
        let scale = log_scale(&mut rng) * 0.5;
        a.clear();
        a.extend((0..len).map(|_| rng.random_range(f64::MIN_POSITIVE..scale)));
        let sum: f64 = a.iter().sum();
        let lhs = product(&a, -1.0);
        let rhs = 1.0 - 2.0 * sum;
        tracker.observe(lhs - rhs + SAMPLE_TOLERANCE, format!("iii:{s}"));
    }
    VerificationReport::from_margin(
        "lemma7",
        0,
        [Scalar::from(n_samples), Scalar::from(seed)],
        tracker.min,
        tracker.at.map_or(Scalar::from("none"), Scalar::from),
        0.0,
    )
}

/// Both sides of the sine-ratio bound at `(x, y, z)`.
///
/// `lhs = (sin^2(x+y) - sin^2 z) / sin^2 x`, computed as `sin(x+y-z) sin(x+y+z) / sin^2 x`,
/// and `rhs = A (1 - (2x|y| + 4/3 y^2 + 6x^6/7! + x^5|y| + z^2))` with
/// `A = ((x+y)^2 - z^2) / x^2`.
pub fn lemma8_sides(x: f64, y: f64, z: f64) -> (f64, f64) {
    let s = x.sin();
    let lhs = (x + y - z).sin() * (x + y + z).sin() / (s * s);
    let a = ((x + y) * (x + y) - z * z) / (x * x);
    let e = 2.0 * x * y.abs() + 4.0 / 3.0 * y * y + 6.0 * x.powi(6) / 5040.0 + x.powi(5) * y.abs() + z * z;
    (lhs, a * (1.0 - e))
}

/// Whether `(x, y, z)` satisfies the preconditions of the sine-ratio bound.
pub fn lemma8_admissible(x: f64, y: f64, z: f64) -> bool {
    let m = y.abs().max(z.abs());
    let s = (x + y) * (x + y);
    0.0 < m && m <= x && x < 0.5 && 2.0 * z * z <= s && (s - z * z) / (x * x) >= 0.5
}

/// Samples the sine-ratio bound at `n_samples` admissible triples (rejection sampling).
pub fn check_lemma8(n_samples: usize, seed: u64) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = MarginTracker::new();
    let mut accepted = 0;
    while accepted < n_samples {
        let x: f64 = rng.random_range(0.0..0.5) * if rng.random_bool(0.5) { 1.0 } else { log_scale(&mut rng) };
        let y = rng.random_range(-x..=x) * if rng.random_bool(0.3) { log_scale(&mut rng) } else { 1.0 };
        let z = rng.random_range(-x..=x) * if rng.random_bool(0.3) { log_scale(&mut rng) } else { 1.0 };
        if !lemma8_admissible(x, y, z) {
            continue;
        }
        let (lhs, rhs) = lemma8_sides(x, y, z);
        tracker.observe(lhs - rhs + SAMPLE_TOLERANCE * lhs.abs().max(1.0), format!("x={x},y={y},z={z}"));
        accepted += 1;
    }
    VerificationReport::from_margin(
        "lemma8",
        0,
        [Scalar::from(n_samples), Scalar::from(seed)],
        tracker.min,
        tracker.at.map_or(Scalar::from("none"), Scalar::from),
        0.0,
    )
}

/// Explicit constants of the convergence estimate, evaluated over `k <= 30` and the
/// envelope interval of the base.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofConstants {
    pub b: u32,
    /// `max |eps + q_k delta_k / 2|`.
    pub c1: f64,
    /// `max q_k delta_k`.
    pub c2: f64,
    /// `c2 pi^2 / 4 + 4 c1^2`.
    pub c3: f64,
    /// `c2 + max eps`.
    pub c4: f64,
    pub n0: u32,
    pub psi: &'static str,
    pub k_max: usize,
    /// Stated ceilings for `(c1, c2, c3)`.
    pub ceilings: [f64; 3],
    pub reports: Vec<VerificationReport>,
}

impl ProofConstants {
    pub fn pass(&self) -> bool {
        super::all_pass(&self.reports)
    }
}

pub fn proof_constants(b: u32) -> Result<ProofConstants> {
    let ceilings = match b {
        1 => [0.8, 0.5, 4.0],
        5 => [1.03, 0.2, 5.0],
        _ => {
            return Err(SudlerError::Domain(format!(
                "explicit constants are stated for b = 1 and b = 5, got {b}"
            )))
        }
    };
    let params = QuadraticParams::new(b)?;
    let (lo, hi) = EnvelopeConfig::for_base(b)?.interval;
    let k_max = params.max_index().min(30);
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for k in 1..=k_max {
        let qd = params.q(k)? as f64 * params.delta(k)?;
        c2 = c2.max(qd);
        c1 = c1.max((lo + qd / 2.0).abs()).max((hi + qd / 2.0).abs());
    }
    let c3 = c2 * std::f64::consts::PI.powi(2) / 4.0 + 4.0 * c1 * c1;
    let c4 = c2 + hi;
    let range = [Scalar::from(1usize), Scalar::from(k_max)];
    let reports = [("c1", c1), ("c2", c2), ("c3", c3)]
        .iter()
        .zip(ceilings)
        .map(|(&(name, v), ceil)| {
            VerificationReport::from_margin(format!("constants.{name}"), b, range.clone(), ceil - v, Scalar::from(v), 1e-12)
        })
        .collect();
    Ok(ProofConstants {
        b,
        c1,
        c2,
        c3,
        c4,
        n0: 2,
        psi: "t^(2/3) * ln(t)^(1/3)",
        k_max,
        ceilings,
        reports,
    })
}

/// Largest relative deviation of `P_{q_k}` from the truncated limit over a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceProbe {
    pub b: u32,
    pub t: u64,
    pub grid: usize,
    pub ks: Vec<usize>,
    pub deviations: Vec<f64>,
    /// Whether the deviations are non-increasing over the window.
    pub monotone: bool,
    /// Smallest `c` with `dev_k <= c q_k^(-2/3) log^(2/3) q_k` on the window.
    pub fitted_c: f64,
    /// `dev_k / (q_k^(-2/3) log^(2/3) q_k)` per `k`.
    pub ratios: Vec<f64>,
}

fn rate(q: f64) -> f64 {
    q.powf(-2.0 / 3.0) * q.ln().powf(2.0 / 3.0)
}

/// Probes `max_eps |P_{q_k}(eps) / G_{beta,T}(eps) - 1|` for `k` in `ks` over an evenly
/// spaced grid of `grid` points on the envelope interval of the base.
pub fn convergence_probe(b: u32, ks: std::ops::RangeInclusive<usize>, grid: usize) -> Result<ConvergenceProbe> {
    let cfg = EnvelopeConfig::for_base(b)?;
    let params = QuadraticParams::new(b)?;
    if grid < 2 {
        return Err(SudlerError::Domain("the probe grid needs at least two points".into()));
    }
    let (lo, hi) = cfg.interval;
    let eps: Vec<f64> = (0..grid).map(|j| lo + (hi - lo) * j as f64 / (grid - 1) as f64).collect();
    let limit = eps
        .iter()
        .map(|&e| g_truncated(&params, DEFAULT_T, e).map(|g| g.value))
        .collect::<Result<Vec<_>>>()?;
    let ks: Vec<usize> = ks.collect();
    let mut deviations = Vec::with_capacity(ks.len());
    let mut ratios = Vec::with_capacity(ks.len());
    for &k in &ks {
        let mut dev = 0.0f64;
        for (&e, &g) in eps.iter().zip(&limit) {
            let p = shifted_product(&params, k, e)?.value();
            dev = dev.max((p / g - 1.0).abs());
        }
        deviations.push(dev);
        ratios.push(dev / rate(params.q(k)? as f64));
    }
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0]);
    let fitted_c = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(ConvergenceProbe {
        b,
        t: DEFAULT_T,
        grid,
        ks,
        deviations,
        monotone,
        fitted_c,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_values() {
        assert_eq!(psi(1.0), 0.0);
        let e = std::f64::consts::E;
        assert!((psi(e) - e.powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn lemma7_zero_sequence_is_tight() {
        let a = [0.0; 5];
        assert_eq!(product(&a, 1.0), 1.0);
        let r = check_lemma7(2000, 1);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn lemma7_inverse_square_sequence() {
        let c = 0.3;
        let a: Vec<f64> = (2..500).map(|n| c / (n * n) as f64).collect();
        let sum: f64 = a.iter().sum();
        assert!(product(&a, 1.0) >= 1.0 - (sum + c * c));
    }

    #[test]
    fn lemma8_limits() {
        let y = 1e-7;
        let (l, r) = lemma8_sides(0.3, y, y / 2.0);
        assert!(l >= r && (l - 1.0).abs() < 1e-5);
        assert!(lemma8_admissible(0.499, 0.499, 1e-6));
        let (l, r) = lemma8_sides(0.499, 0.499, 1e-6);
        assert!(l >= r);
        assert!(!lemma8_admissible(0.3, 0.0, 0.0));
        assert!(check_lemma8(2000, 2).pass);
    }

    #[test]
    fn constants_for_golden_ratio() {
        let c = proof_constants(1).unwrap();
        assert!(c.pass(), "{c:?}");
        assert!((c.c2 - 0.4721).abs() < 1e-3);
        assert!((c.c1 - 0.536).abs() < 1e-3);
        assert!(proof_constants(3).is_err());
    }

    #[test]
    fn constants_for_base_five() {
        let c = proof_constants(5).unwrap();
        assert!(c.pass(), "{c:?}");
        assert!((c.c1 - 1.0229).abs() < 1e-3, "{c:?}");
    }
}
