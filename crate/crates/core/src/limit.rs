//! The limit function
//! `G_beta(eps) = 2 pi |eps + 1/s| prod_{n>=1} g_n(eps)` with `s = sqrt(b^2 + 4)`,
//! its truncation to `n <= T`, and the constant `C_b = G_beta(0)`.

use serde::Serialize;

use crate::accumulate::LogProduct;
use crate::error::{Result, SudlerError};
use crate::quadratic::QuadraticParams;
use crate::sudler::shifted_product;

/// Truncation length used by default everywhere.
pub const DEFAULT_T: u64 = 100_000;

/// `g_n(eps) = |(1 - l(n))^2 - (eps + 1/(2s))^2 / n^2|` with
/// `l(n) = ({n beta} - 1/2) / (n s)`.
#[inline]
pub fn g_term(params: &QuadraticParams, n: u64, epsilon: f64) -> f64 {
    let s = params.sqrt_disc();
    let nf = n as f64;
    let ell = (params.phase(n).to_f64() - 0.5) / (nf * s);
    let h = (epsilon + 0.5 / s) / nf;
    let a = 1.0 - ell;
    (a * a - h * h).abs()
}

/// A truncated evaluation `G_{beta,T}(eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitEval {
    pub b: u32,
    pub t: u64,
    pub epsilon: f64,
    pub value: f64,
    pub log_value: f64,
    /// Relative truncation error bound for `eps_max = |eps|`; infinite when `T` is
    /// too small for the bound to apply.
    pub error_bound: f64,
}

pub fn g_truncated(params: &QuadraticParams, t: u64, epsilon: f64) -> Result<LimitEval> {
    if t == 0 {
        return Err(SudlerError::Domain("truncation length T must be >= 1".into()));
    }
    let s = params.sqrt_disc();
    let mut acc = LogProduct::new();
    acc.push(2.0 * std::f64::consts::PI * (epsilon + 1.0 / s).abs());
    let step = params.beta();
    let mut phase = crate::phase::Turn::ZERO;
    let c = epsilon + 0.5 / s;
    for n in 1..=t {
        phase += step;
        let nf = n as f64;
        let ell = (phase.to_f64() - 0.5) / (nf * s);
        let h = c / nf;
        let a = 1.0 - ell;
        acc.push((a * a - h * h).abs());
    }
    let v = acc.finish();
    Ok(LimitEval {
        b: params.b(),
        t,
        epsilon,
        value: v.value(),
        log_value: v.log_value,
        error_bound: truncation_error_bound(params.b(), t, epsilon.abs()).unwrap_or(f64::INFINITY),
    })
}

/// The constant `M = (1/(4(b^2+4)) + eps_max + 1/(2s))^2` of the truncation bound.
pub fn truncation_m(b: u32, eps_max: f64) -> f64 {
    let d = (b * b + 4) as f64;
    let s = d.sqrt();
    let inner = 1.0 / (4.0 * d) + eps_max + 1.0 / (2.0 * s);
    inner * inner
}

/// Relative error bound for replacing `G_beta` by `G_{beta,T}` on `|eps| <= eps_max`:
/// `(3b / (s L)) log(T+1) / T + (6 + 3M) / (2T)` with `L = log b`, or `log(3/2)`
/// when `b = 1`.
///
/// Fails when the bound is not below 1/2, since the underlying estimate needs that.
pub fn truncation_error_bound(b: u32, t: u64, eps_max: f64) -> Result<f64> {
    if b == 0 {
        return Err(SudlerError::InvalidBase(b));
    }
    if t == 0 {
        return Err(SudlerError::Domain("truncation length T must be >= 1".into()));
    }
    let s = ((b * b + 4) as f64).sqrt();
    let l = if b == 1 { 1.5f64.ln() } else { (b as f64).ln() };
    let tf = t as f64;
    let m = truncation_m(b, eps_max);
    let bound = 3.0 * b as f64 / (s * l) * (tf + 1.0).ln() / tf + (6.0 + 3.0 * m) / (2.0 * tf);
    if bound >= 0.5 {
        return Err(SudlerError::Domain(format!(
            "truncation bound {bound:.3} for T = {t} is not below 1/2"
        )));
    }
    Ok(bound)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    ClosedProduct,
    ShiftedLimit,
}

/// `C_b` by two independent routes and the derived limsup constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitConstants {
    pub b: u32,
    /// Closed product `2 pi / s * prod_{n<=T} g_n(0)`.
    pub c_b: f64,
    /// `P_{q_k}(beta, 0)` at `k = k_probe`.
    pub c_b_shifted: f64,
    pub method_tag: MethodTag,
    pub t: u64,
    pub k_probe: usize,
    pub disagreement: f64,
    pub tolerance: f64,
    /// `s / (2 pi) * C_b`, the limit of `P_{q_n - 1} / (q_n - 1)`.
    pub limsup_const: f64,
    /// `P_{q_k - 1} / (q_k - 1)` at `k = k_probe`.
    pub limsup_probe: f64,
}

/// Probe index used for the shifted-product route: 25 for `b = 1`, 10 for `b = 5`,
/// otherwise the largest `k` with `q_k <= 10^7`.
pub fn default_probe_index(params: &QuadraticParams) -> usize {
    match params.b() {
        1 => 25,
        5 => 10,
        _ => params
            .table()
            .index_below(10_000_000)
            .expect("q_0 = 1"),
    }
}

pub fn compute_c_b(params: &QuadraticParams, t: u64, k_probe: usize) -> Result<LimitConstants> {
    let b = params.b();
    if !(1..=5).contains(&b) {
        return Err(SudlerError::Domain(format!("C_b is only defined here for 1 <= b <= 5, got {b}")));
    }
    let closed = g_truncated(params, t, 0.0)?;
    let shifted = shifted_product(params, k_probe, 0.0)?;
    let c_b = closed.value;
    let c_b_shifted = shifted.value();
    let tolerance = truncation_error_bound(b, t, 0.0)? + 1e-3;
    let disagreement = (c_b_shifted / c_b - 1.0).abs();
    if disagreement > tolerance {
        return Err(SudlerError::Inconsistent(format!(
            "C_{b}: closed product {c_b} vs P_(q_{k_probe}) = {c_b_shifted}"
        )));
    }
    let s = params.sqrt_disc();
    let q = params.q(k_probe)?;
    let delta = params.delta(k_probe)?;
    let last = 2.0 * crate::phase::sin_pi(delta.min(0.5));
    Ok(LimitConstants {
        b,
        c_b,
        c_b_shifted,
        method_tag: MethodTag::ClosedProduct,
        t,
        k_probe,
        disagreement,
        tolerance,
        limsup_const: s / (2.0 * std::f64::consts::PI) * c_b,
        limsup_probe: c_b_shifted / (last * (q - 1) as f64),
    })
}
