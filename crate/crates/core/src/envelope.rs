//! Computable lower envelopes for the shifted products `P_{q_k}(beta, eps)`.
//!
//! For `k <= K0` the products are evaluated exactly; beyond that they are bounded
//! through the truncated limit function with a multiplicative slack `delta` and an
//! additive slack `gamma`:
//!
//! `P(eps) = min { min_k P_{q_k}(beta, eps), (1 - delta) G_{beta,T}(eps) - gamma }`.
//!
//! `P*` drops the lowest block index. Both are pseudo-concave on intervals free of
//! zeros, so their minimum over an interval is attained at an endpoint.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SudlerError};
use crate::limit::{g_truncated, truncation_error_bound, DEFAULT_T};
use crate::quadratic::QuadraticParams;
use crate::sudler::shifted_product;

/// Named evaluation points used by the golden-ratio case analysis.
pub mod checkpoints {
    pub const GOLDEN_LO: f64 = -0.19;
    pub const GOLDEN_HI: f64 = 0.3;
    pub const GOLDEN_INNER_LO: f64 = -0.12;
    pub const GOLDEN_INNER_HI: f64 = 0.19;
    pub const GOLDEN_NEAR_LO: f64 = -0.07;
    pub const GOLDEN_NEAR_HI: f64 = 0.07;
    pub const GOLDEN_MID_LO: f64 = -0.15;
    pub const GOLDEN_MID_HI: f64 = 0.15;
    pub const BASE5_LO: f64 = -0.15;
    pub const BASE5_HI: f64 = 0.93;
}

/// Smallest convergent index whose block can occur in a decomposition.
///
/// For `b = 1` the first digit is always zero, so the block `q_0` never appears and
/// the indices shift by one: the envelope `P` starts at `q_1` and `P*` at `q_2`.
pub fn first_block(b: u32) -> usize {
    usize::from(b == 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeConfig {
    pub b: u32,
    /// Largest convergent index evaluated exactly.
    pub k0: usize,
    pub t: u64,
    pub delta: f64,
    pub gamma: f64,
    pub interval: (f64, f64),
}

impl EnvelopeConfig {
    /// The certified parameter sets: `b = 1` with `K0 = 25`, factor 0.94, `gamma = 0.001`
    /// on `[-0.19, 0.3]`, and `b = 5` with `K0 = 10`, factor 0.998, `gamma = 0.0001` on
    /// `[-0.15, 0.93]`, both with `T = 100000`.
    pub fn for_base(b: u32) -> Result<Self> {
        match b {
            1 => Ok(EnvelopeConfig {
                b,
                k0: 25,
                t: DEFAULT_T,
                delta: 0.06,
                gamma: 0.001,
                interval: (checkpoints::GOLDEN_LO, checkpoints::GOLDEN_HI),
            }),
            5 => Ok(EnvelopeConfig {
                b,
                k0: 10,
                t: DEFAULT_T,
                delta: 0.002,
                gamma: 0.0001,
                interval: (checkpoints::BASE5_LO, checkpoints::BASE5_HI),
            }),
            _ => Err(SudlerError::Config(format!(
                "no certified envelope parameters for b = {b}; only b = 1 and b = 5"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SudlerError::Config(format!("delta = {} not in (0, 1)", self.delta)));
        }
        if !(self.gamma >= 0.0) {
            return Err(SudlerError::Config(format!("gamma = {} is negative", self.gamma)));
        }
        if !(self.interval.0 < self.interval.1) {
            return Err(SudlerError::Config(format!(
                "interval [{}, {}] is empty",
                self.interval.0, self.interval.1
            )));
        }
        if self.t == 0 {
            return Err(SudlerError::Config("T must be positive".into()));
        }
        Ok(())
    }

    /// `1 - delta`.
    pub fn factor(&self) -> f64 {
        1.0 - self.delta
    }

    pub fn eps_max(&self) -> f64 {
        self.interval.0.abs().max(self.interval.1.abs())
    }
}

/// Which term of an envelope minimum is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Block(usize),
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeValue {
    pub epsilon: f64,
    /// Envelope with only the truncation error as slack: `G_T (1 - bound) - gamma`.
    pub p_bar: f64,
    pub p: f64,
    pub p_star: f64,
    pub g_t: f64,
    pub p_branch: Branch,
    pub p_star_branch: Branch,
    /// `(k, P_{q_k}(beta, eps))` for every evaluated block.
    #[serde(skip)]
    pub blocks: Vec<(usize, f64)>,
}

/// Function whose interval minimum [`Envelope::lower_bound`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Which {
    P,
    PStar,
    /// A single shifted product `P_{q_k}(beta, eps)`.
    Block(usize),
}

/// Envelope evaluator bound to one configuration.
#[derive(Clone, Debug)]
pub struct Envelope {
    cfg: EnvelopeConfig,
    params: QuadraticParams,
}

fn min_branch(blocks: &[(usize, f64)], from: usize, limit: f64) -> (f64, Branch) {
    let mut best = (limit, Branch::Limit);
    for &(k, v) in blocks.iter().filter(|(k, _)| *k >= from) {
        if v < best.0 {
            best = (v, Branch::Block(k));
        }
    }
    best
}

impl Envelope {
    pub fn new(cfg: EnvelopeConfig) -> Result<Self> {
        cfg.validate()?;
        let params = QuadraticParams::new(cfg.b)?;
        params.q(cfg.k0)?;
        Ok(Envelope { cfg, params })
    }

    pub fn config(&self) -> &EnvelopeConfig {
        &self.cfg
    }

    pub fn params(&self) -> &QuadraticParams {
        &self.params
    }

    fn p_star_from(&self) -> usize {
        first_block(self.cfg.b) + 1
    }

    pub fn eval(&self, epsilon: f64) -> Result<EnvelopeValue> {
        self.eval_from(epsilon, first_block(self.cfg.b))
    }

    fn eval_from(&self, epsilon: f64, from: usize) -> Result<EnvelopeValue> {
        let g = g_truncated(&self.params, self.cfg.t, epsilon)?;
        let blocks = (from..=self.cfg.k0)
            .into_par_iter()
            .map(|k| shifted_product(&self.params, k, epsilon).map(|v| (k, v.value())))
            .collect::<Result<Vec<_>>>()?;
        let limit = self.cfg.factor() * g.value - self.cfg.gamma;
        let bound = truncation_error_bound(self.cfg.b, self.cfg.t, self.cfg.eps_max()).unwrap_or(1.0);
        let bar_limit = g.value * (1.0 - bound) - self.cfg.gamma;
        let (p, p_branch) = min_branch(&blocks, first_block(self.cfg.b), limit);
        let (p_star, p_star_branch) = min_branch(&blocks, self.p_star_from(), limit);
        let (p_bar, _) = min_branch(&blocks, first_block(self.cfg.b), bar_limit);
        Ok(EnvelopeValue {
            epsilon,
            p_bar,
            p,
            p_star,
            g_t: g.value,
            p_branch,
            p_star_branch,
            blocks,
        })
    }

    /// `P*(eps)` alone, skipping the lowest block.
    pub fn p_star(&self, epsilon: f64) -> Result<f64> {
        Ok(self.eval_from(epsilon, self.p_star_from())?.p_star)
    }

    pub fn p(&self, epsilon: f64) -> Result<f64> {
        Ok(self.eval(epsilon)?.p)
    }

    pub fn value(&self, which: Which, epsilon: f64) -> Result<f64> {
        match which {
            Which::P => self.p(epsilon),
            Which::PStar => self.p_star(epsilon),
            Which::Block(k) => Ok(shifted_product(&self.params, k, epsilon)?.value()),
        }
    }

    /// The block indices entering `which`.
    fn blocks_of(&self, which: Which) -> std::ops::RangeInclusive<usize> {
        match which {
            Which::P => first_block(self.cfg.b)..=self.cfg.k0,
            Which::PStar => self.p_star_from()..=self.cfg.k0,
            Which::Block(k) => k..=k,
        }
    }

    /// Checks that `G_T` and every block product entering `which` have no zero in
    /// `[a, b_end]`.
    pub fn check_zero_free(&self, a: f64, b_end: f64, which: Which) -> Result<()> {
        let err = || SudlerError::IntervalContainsZero { lo: a, hi: b_end };
        for k in self.blocks_of(which) {
            if block_has_zero(&self.params, k, a, b_end)? {
                return Err(err());
            }
        }
        if matches!(which, Which::Block(_)) {
            return Ok(());
        }
        let s = self.params.sqrt_disc();
        let zero = -1.0 / s;
        if a <= zero && zero <= b_end {
            return Err(err());
        }
        let eps_max = a.abs().max(b_end.abs());
        let bound = truncation_error_bound(self.cfg.b, self.cfg.t, eps_max)?;
        let threshold = 10.0 * (bound + self.cfg.gamma);
        let mut points = vec![a, b_end];
        if b_end > a {
            let n = 64;
            points.extend((0..n).map(|j| {
                let x = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
                0.5 * (a + b_end) + 0.5 * (b_end - a) * x
            }));
        }
        for e in points {
            if g_truncated(&self.params, self.cfg.t, e)?.value <= threshold {
                return Err(err());
            }
        }
        Ok(())
    }

    /// `min{f(a), f(b_end)}`, a lower bound for `f` on the whole interval once it is
    /// known to be zero-free.
    pub fn lower_bound(&self, a: f64, b_end: f64, which: Which) -> Result<f64> {
        if a > b_end {
            return Err(SudlerError::Domain(format!("empty interval [{a}, {b_end}]")));
        }
        self.check_zero_free(a, b_end, which)?;
        let fa = self.value(which, a)?;
        let fb = if b_end == a { fa } else { self.value(which, b_end)? };
        Ok(fa.min(fb))
    }
}

/// Whether `P_{q_k}(beta, eps)` vanishes for some `eps` in `[a, b_end]`.
///
/// A zero needs `||r beta|| <= max|eps| / q_k` for some `1 <= r <= q_k`. For `r < q_k`
/// the distance is at least `||q_{k-1} beta||`, so usually only `r = q_k` matters and
/// its nearest zero sits at `eps = -q_k delta_k`. Otherwise all `r` are scanned.
fn block_has_zero(params: &QuadraticParams, k: usize, a: f64, b_end: f64) -> Result<bool> {
    let q = params.q(k)?;
    let qf = q as f64;
    let reach = a.abs().max(b_end.abs());
    let zero_at_q = -qf * params.delta(k)?;
    if a <= zero_at_q && zero_at_q <= b_end {
        return Ok(true);
    }
    // Nearest zero from r < q_k, and the next zero from r = q_k itself.
    let min_other = if q > 1 {
        let d = params.delta(k - 1)?;
        d.min(1.0 - d)
    } else {
        f64::INFINITY
    };
    let guard = 1.0 - 1e-12;
    if reach < qf * min_other * guard && reach < qf * (1.0 - params.delta(k)?) * guard {
        return Ok(false);
    }
    if q > 1_000_000 {
        return Err(SudlerError::Domain(format!(
            "cannot certify that P_(q_{k}) has no zero on [{a}, {b_end}]"
        )));
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    for r in 1..=q {
        // Zeros solve (-1)^k eps / q = m - {r beta}.
        let x = params.phase(r).to_f64();
        let lo = (sign * a / qf).min(sign * b_end / qf) + x;
        let hi = (sign * a / qf).max(sign * b_end / qf) + x;
        if lo.ceil() <= hi {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn envelope_eval(cfg: &EnvelopeConfig, epsilon: f64) -> Result<EnvelopeValue> {
    Envelope::new(*cfg)?.eval(epsilon)
}

pub fn interval_lower_bound(cfg: &EnvelopeConfig, a: f64, b_end: f64, which: Which) -> Result<f64> {
    Envelope::new(*cfg)?.lower_bound(a, b_end, which)
}

/// `factor * min{G_T(a), G_T(b_end)} - gamma` with the certified parameters for
/// `b = 1` or `b = 5`.
pub fn corollary_bound(b: u32, a: f64, b_end: f64) -> Result<f64> {
    let cfg = EnvelopeConfig::for_base(b)?;
    let (lo, hi) = cfg.interval;
    if !(lo <= a && a <= b_end && b_end <= hi) {
        return Err(SudlerError::Domain(format!(
            "[{a}, {b_end}] is not inside the certified range [{lo}, {hi}]"
        )));
    }
    let params = QuadraticParams::new(b)?;
    let ga = g_truncated(&params, cfg.t, a)?.value;
    let gb = g_truncated(&params, cfg.t, b_end)?.value;
    Ok(cfg.factor() * ga.min(gb) - cfg.gamma)
}

#[cfg(test)]
mod tests {
    use super::checkpoints::*;
    use super::*;

    #[test]
    fn configs() {
        let c = EnvelopeConfig::for_base(1).unwrap();
        assert_eq!((c.k0, c.t, c.gamma), (25, 100_000, 0.001));
        assert!((c.factor() - 0.94).abs() < 1e-15);
        let c = EnvelopeConfig::for_base(5).unwrap();
        assert!((c.factor() - 0.998).abs() < 1e-15);
        assert!(EnvelopeConfig::for_base(2).is_err());
        let mut bad = c;
        bad.delta = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn golden_values_at_zero() {
        let env = Envelope::new(EnvelopeConfig::for_base(1).unwrap()).unwrap();
        let v = env.eval(0.0).unwrap();
        assert!((2.21..=2.23).contains(&v.p_star), "{}", v.p_star);
        assert!(v.p <= 1.87 && (v.p - 1.8640648).abs() < 1e-6);
        assert!(v.p <= v.p_star && v.p_bar >= v.p);
        assert_eq!(v.p_star_branch, Branch::Block(3));
    }

    #[test]
    fn golden_interval_bounds() {
        let env = Envelope::new(EnvelopeConfig::for_base(1).unwrap()).unwrap();
        let p = env.lower_bound(GOLDEN_LO, GOLDEN_HI, Which::P).unwrap();
        assert!((1.12..=1.14).contains(&p), "{p}");
        let ps = env.lower_bound(GOLDEN_LO, GOLDEN_HI, Which::PStar).unwrap();
        assert!(ps >= 1.395, "{ps}");
        let inner = env.lower_bound(GOLDEN_INNER_LO, GOLDEN_INNER_HI, Which::PStar).unwrap();
        assert!(inner > 1.75);
        assert!(env.lower_bound(-0.5, 0.0, Which::PStar).is_err());
    }

    #[test]
    fn corollary_values() {
        let v = corollary_bound(1, 0.0, 0.0).unwrap();
        let params = QuadraticParams::new(1).unwrap();
        let g0 = g_truncated(&params, DEFAULT_T, 0.0).unwrap().value;
        assert!((v - (0.94 * g0 - 0.001)).abs() < 1e-12);
        let lo = corollary_bound(1, GOLDEN_LO, GOLDEN_HI).unwrap();
        let env = Envelope::new(EnvelopeConfig::for_base(1).unwrap()).unwrap();
        let ps = env.lower_bound(GOLDEN_LO, GOLDEN_HI, Which::PStar).unwrap();
        assert!(ps <= lo + 1e-12);
        assert!(corollary_bound(5, BASE5_LO, BASE5_HI).unwrap() > 0.0);
        assert!(corollary_bound(1, -0.3, 0.0).is_err());
    }

    #[test]
    fn block_zero_detection() {
        let p5 = QuadraticParams::new(5).unwrap();
        // P_1(beta, eps) vanishes at eps = 1 - beta inside [-0.15, 0.93].
        assert!(block_has_zero(&p5, 0, BASE5_LO, BASE5_HI).unwrap());
        assert!(!block_has_zero(&p5, 0, -0.15, 0.5).unwrap());
        for k in 1..=10 {
            assert!(!block_has_zero(&p5, k, BASE5_LO, BASE5_HI).unwrap());
        }
        let p1 = QuadraticParams::new(1).unwrap();
        for k in 1..=25 {
            assert!(!block_has_zero(&p1, k, GOLDEN_LO, GOLDEN_HI).unwrap());
            assert!(block_has_zero(&p1, k, -0.7, 0.0).unwrap());
        }
    }
}
