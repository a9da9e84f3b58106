//! Sudler products `P_N(beta) = prod_{r=1}^N 2|sin(pi r beta)|`, their shifted block
//! variants, and the decompositions that connect the two.

use std::collections::HashMap;

use serde::Serialize;

use crate::accumulate::{CompensatedSum, LogProduct, ProductValue, ZERO_FACTOR};
use crate::error::{Result, SudlerError};
use crate::ostrowski::{expand, OstrowskiExpansion};
use crate::phase::{sin_pi, two_sin_abs, Turn};
use crate::quadratic::QuadraticParams;

/// Largest `N` accepted by the direct product and sweep routines.
pub const MAX_N: u64 = 100_000_000;

fn check_n(n: u64) -> Result<()> {
    if n > MAX_N {
        Err(SudlerError::Domain(format!("N = {n} exceeds the limit {MAX_N}")))
    } else {
        Ok(())
    }
}

/// `prod_{r=1}^{len} 2|sin(pi((offset + r) beta + shift))|`.
pub fn offset_product(params: &QuadraticParams, offset: u64, len: u64, shift: Turn) -> ProductValue {
    let step = params.beta();
    let mut phase = params.phase(offset) + shift;
    let mut acc = LogProduct::new();
    for _ in 0..len {
        phase += step;
        acc.push(two_sin_abs(phase));
    }
    acc.finish()
}

/// `P_N(beta)`. A flagged zero factor signals a precision fault since `beta` is
/// irrational.
pub fn sudler_product(params: &QuadraticParams, n: u64) -> Result<ProductValue> {
    check_n(n)?;
    let v = offset_product(params, 0, n, Turn::ZERO);
    if v.zero {
        return Err(SudlerError::PrecisionFault(format!(
            "a factor of P_{n} evaluated to zero"
        )));
    }
    Ok(v)
}

/// Incremental sweep yielding `(N, log P_N)` for consecutive `N`.
///
/// A zero factor, which cannot happen for irrational `beta`, shows up as `-inf`.
#[derive(Clone, Debug)]
pub struct SudlerSequence {
    step: Turn,
    phase: Turn,
    next: u64,
    end: u64,
    log: CompensatedSum,
}

impl SudlerSequence {
    /// Sweep over `start..end`, seeded with `log P_{start-1}`.
    pub fn range(params: &QuadraticParams, start: u64, end: u64) -> Result<Self> {
        check_n(end.saturating_sub(1))?;
        let start = start.max(1);
        let mut log = CompensatedSum::new();
        let seed = start - 1;
        if seed > 0 {
            log.add(sudler_product(params, seed)?.log_value);
        }
        Ok(SudlerSequence {
            step: params.beta(),
            phase: params.phase(seed),
            next: start,
            end: end.max(start),
            log,
        })
    }
}

impl Iterator for SudlerSequence {
    type Item = (u64, f64);

    #[inline]
    fn next(&mut self) -> Option<(u64, f64)> {
        if self.next >= self.end {
            return None;
        }
        self.phase += self.step;
        let f = two_sin_abs(self.phase);
        if f < ZERO_FACTOR {
            self.log.add(f64::NEG_INFINITY);
        } else {
            self.log.add(f.ln());
        }
        let n = self.next;
        self.next += 1;
        Some((n, self.log.value()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = (self.end - self.next) as usize;
        (r, Some(r))
    }
}

/// `(N, log P_N)` for `N = 1..=n_max`.
pub fn sudler_sequence(params: &QuadraticParams, n_max: u64) -> Result<SudlerSequence> {
    SudlerSequence::range(params, 1, n_max + 1)
}

fn block_shift(k: usize, q: u64, epsilon: f64) -> Turn {
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Turn::from_f64(sign * epsilon / q as f64)
}

/// `P_{q_k}(beta, eps) = prod_{r=1}^{q_k} 2|sin(pi(r beta + (-1)^k eps / q_k))|`.
///
/// Zeros are legitimate here, for instance at `eps = -q_k delta_k`.
pub fn shifted_product(params: &QuadraticParams, k: usize, epsilon: f64) -> Result<ProductValue> {
    let q = params.q(k)?;
    check_n(q)?;
    Ok(offset_product(params, 0, q, block_shift(k, q, epsilon)))
}

/// Memo of shifted products keyed by block index and the exact bits of `eps`.
///
/// Perturbations of the large blocks depend only on the leading digits, so runs over
/// many `N` revisit the same `(k, eps)` pairs.
#[derive(Clone, Debug)]
pub struct ShiftedCache {
    params: QuadraticParams,
    map: HashMap<(usize, u64), ProductValue>,
}

impl ShiftedCache {
    pub fn new(params: QuadraticParams) -> Self {
        ShiftedCache {
            params,
            map: HashMap::new(),
        }
    }

    pub fn params(&self) -> &QuadraticParams {
        &self.params
    }

    pub fn get(&mut self, k: usize, epsilon: f64) -> Result<ProductValue> {
        let key = (k, epsilon.to_bits());
        if let Some(v) = self.map.get(&key) {
            return Ok(*v);
        }
        let v = shifted_product(&self.params, k, epsilon)?;
        self.map.insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// One factor `P_{q_k}(beta, eps)` of a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftedTerm {
    pub k: usize,
    pub epsilon: f64,
    /// Number of factors preceding the block, so the block covers `offset+1..=offset+q_k`.
    pub offset: u64,
    /// `(-1)^k beta^(2(k+1))`, the correction in `eps = (1 + r) * (...) / sqrt(b^2+4)`.
    pub r_correction: f64,
    /// Block position `i = n - k` counted from the leading digit.
    pub block: usize,
    /// Copy `a` within the block, `0 <= a < b_{k+1}`.
    pub copy: u32,
}

/// Closed form for the perturbation of copy `a` of block `m`, with `digits[l-1] = b_l`.
/// The digit list may end in a virtual digit.
fn block_epsilon(params: &QuadraticParams, digits: &[i64], m: usize, a: u32) -> (f64, f64) {
    let beta = params.beta_f64();
    let mut bracket = a as f64;
    let mut pow = 1.0;
    let mut sign = 1.0;
    // b_{m+1+t} multiplies (-beta)^t.
    for &d in digits.iter().skip(m + 1) {
        pow *= beta;
        sign = -sign;
        bracket += sign * d as f64 * pow;
    }
    let parity = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let r = parity * beta.powi(2 * (m as i32 + 1));
    (bracket * (1.0 + r) / params.sqrt_disc(), r)
}

fn build_terms(params: &QuadraticParams, digits: &[u32], virtual_top: Option<i64>) -> Vec<ShiftedTerm> {
    let mut extended: Vec<i64> = digits.iter().map(|&d| d as i64).collect();
    if let Some(v) = virtual_top {
        extended.push(v);
    }
    let q = |l: usize| params.q(l).expect("digit positions stay inside the table");
    let n = digits.len().saturating_sub(1);
    let mut terms = Vec::new();
    let mut offset = 0u64;
    for m in (0..digits.len()).rev() {
        for a in 0..digits[m] {
            let (epsilon, r) = block_epsilon(params, &extended, m, a);
            terms.push(ShiftedTerm {
                k: m,
                epsilon,
                offset,
                r_correction: r,
                block: n - m,
                copy: a,
            });
            offset += q(m);
        }
    }
    terms
}

fn terms_product(params: &QuadraticParams, terms: &[ShiftedTerm]) -> Result<ProductValue> {
    terms.iter().try_fold(ProductValue::empty(), |acc, t| {
        Ok(acc.times(shifted_product(params, t.k, t.epsilon)?))
    })
}

/// `P_N` written as a product of shifted block products following the Ostrowski
/// digits of `N`, leading digit first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub n_value: u64,
    /// Top index `n` with `q_n <= N < q_{n+1}`.
    pub top: usize,
    pub expansion: OstrowskiExpansion,
    pub terms: Vec<ShiftedTerm>,
}

impl Decomposition {
    /// Product of the shifted factors; equals `P_N` when the closed-form
    /// perturbations are right.
    pub fn product(&self, params: &QuadraticParams) -> Result<ProductValue> {
        terms_product(params, &self.terms)
    }
}

pub fn decompose(params: &QuadraticParams, n: u64) -> Result<Decomposition> {
    if n == 0 {
        return Err(SudlerError::Domain("decompose requires N >= 1".into()));
    }
    let expansion = expand(n, params.b())?;
    let top = expansion.top_index().expect("N >= 1 has a nonzero digit");
    let terms = build_terms(params, &expansion.digits, None);
    Ok(Decomposition {
        n_value: n,
        top,
        expansion,
        terms,
    })
}

/// The perturbed decomposition of `L = q_{n+1} - N - 1` behind
/// `P_N = P_{q_{n+1}-1} / prod_{l=1}^{L} 2|sin(pi(l beta + (-beta)^(n+2)))|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MirrorDecomposition {
    pub n: usize,
    pub n_value: u64,
    pub remainder: u64,
    /// Digits of `L` padded to `n + 1` places; the virtual digit `b_{n+2} = -1` is implied.
    pub expansion: OstrowskiExpansion,
    pub terms: Vec<ShiftedTerm>,
}

impl MirrorDecomposition {
    /// Product of the perturbed shifted factors.
    pub fn product(&self, params: &QuadraticParams) -> Result<ProductValue> {
        terms_product(params, &self.terms)
    }
}

pub fn mirror_epsilons(params: &QuadraticParams, n: usize, big_n: u64) -> Result<MirrorDecomposition> {
    let qn = params.q(n)?;
    let qn1 = params.q(n + 1)?;
    if !(qn <= big_n && big_n < qn1) {
        return Err(SudlerError::Domain(format!(
            "N = {big_n} is not in [q_{n}, q_{}) = [{qn}, {qn1})",
            n + 1
        )));
    }
    let remainder = qn1 - big_n - 1;
    let expansion = expand(remainder, params.b())?.pad(n);
    let terms = if remainder == 0 {
        Vec::new()
    } else {
        build_terms(params, &expansion.digits, Some(-1))
    };
    Ok(MirrorDecomposition {
        n,
        n_value: big_n,
        remainder,
        expansion,
        terms,
    })
}

/// `prod_{l=1}^{L} 2|sin(pi(l beta + (-beta)^(n+2)))|` with the shift taken exactly
/// as `-{q_{n+1} beta}`.
pub fn mirror_product(params: &QuadraticParams, n: usize, len: u64) -> Result<ProductValue> {
    let shift = -params.phase(params.q(n + 1)?);
    Ok(offset_product(params, 0, len, shift))
}

/// Second derivative in `eps` of `log P_{q_k}(beta, eps)`:
/// `-sum_{r=1}^{q_k} (pi/q_k)^2 / sin^2(pi(r beta + (-1)^k eps/q_k))`.
pub fn log_second_derivative(params: &QuadraticParams, k: usize, epsilon: f64) -> Result<f64> {
    let q = params.q(k)?;
    check_n(q)?;
    let step = params.beta();
    let mut phase = block_shift(k, q, epsilon);
    let mut sum = CompensatedSum::new();
    for _ in 0..q {
        phase += step;
        let s = sin_pi(phase.signed());
        if s.abs() < ZERO_FACTOR {
            return Err(SudlerError::Domain(format!(
                "eps = {epsilon} is a zero of P_(q_{k})"
            )));
        }
        sum.add(1.0 / (s * s));
    }
    let c = std::f64::consts::PI / q as f64;
    Ok(-c * c * sum.value())
}

/// Interval containing every decomposition perturbation for base `b`.
///
/// For `b = 1` the Zeckendorf structure gives the sharper `(-0.19, 0.3)`.
pub fn epsilon_bounds(params: &QuadraticParams) -> (f64, f64) {
    if params.b() == 1 {
        return (-0.19, 0.3);
    }
    let beta = params.beta_f64();
    let s = params.sqrt_disc();
    let w = 1.0 + beta * beta;
    (-w / s, ((params.b() - 1) as f64 + beta) * w / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct(beta: f64, n: u64) -> f64 {
        (1..=n)
            .map(|r| (2.0 * (std::f64::consts::PI * r as f64 * beta).sin().abs()).ln())
            .sum()
    }

    #[test]
    fn small_products() {
        let p = QuadraticParams::new(1).unwrap();
        assert_eq!(sudler_product(&p, 0).unwrap().value(), 1.0);
        let phi = p.beta_f64();
        let p1 = sudler_product(&p, 1).unwrap().value();
        assert!((p1 - 2.0 * (std::f64::consts::PI * phi).sin()).abs() < 1e-14);
        assert!((p1 - 1.8640648476).abs() < 1e-9);
        let p2 = sudler_product(&p, 2).unwrap().value();
        assert!((p2 - 2.0 * (std::f64::consts::PI * phi).sin() * 2.0 * (2.0 * std::f64::consts::PI * phi).sin().abs()).abs() < 1e-13);
        assert!((p2 - 2.518_315_424_9).abs() < 1e-9, "{p2}");
        assert!(sudler_product(&p, MAX_N + 1).is_err());
    }

    #[test]
    fn sequence_matches_direct_products() {
        for b in 1..=5 {
            let p = QuadraticParams::new(b).unwrap();
            for (n, lp) in sudler_sequence(&p, 3000).unwrap() {
                if n % 97 == 0 {
                    let d = sudler_product(&p, n).unwrap().log_value;
                    assert!((lp - d).abs() < 1e-9);
                    assert!((lp - direct(p.beta_f64(), n)).abs() < 1e-8);
                }
            }
            assert_eq!(sudler_sequence(&p, 0).unwrap().count(), 0);
            let mut r = SudlerSequence::range(&p, 500, 600).unwrap();
            let (n, lp) = r.next().unwrap();
            assert_eq!(n, 500);
            assert!((lp - sudler_product(&p, 500).unwrap().log_value).abs() < 1e-10);
        }
    }

    #[test]
    fn shifted_product_basics() {
        for b in [1, 2, 5] {
            let p = QuadraticParams::new(b).unwrap();
            for k in 0..12 {
                let q = p.q(k).unwrap();
                let a = shifted_product(&p, k, 0.0).unwrap().log_value;
                let d = sudler_product(&p, q).unwrap().log_value;
                assert!((a - d).abs() < 1e-12);
                let zero_at = -(q as f64) * p.delta(k).unwrap();
                assert!(shifted_product(&p, k, zero_at).unwrap().value() <= 1e-8);
            }
        }
    }

    #[test]
    fn golden_ratio_sign_convention() {
        // The golden-ratio form uses (-1)^(n-1) eps / F_n over F_n factors; with
        // q_k = F_{k+1} this is the general (-1)^k eps / q_k convention.
        let p = QuadraticParams::new(1).unwrap();
        let phi = p.beta_f64();
        for k in 2..14usize {
            let fib = p.q(k).unwrap();
            let n = k + 1;
            for &eps in &[-0.15, 0.07, 0.25] {
                let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
                let oracle: f64 = (1..=fib)
                    .map(|r| {
                        let x = r as f64 * phi + sign * eps / fib as f64;
                        (2.0 * (std::f64::consts::PI * x).sin().abs()).ln()
                    })
                    .sum();
                let v = shifted_product(&p, k, eps).unwrap().log_value;
                assert!((v - oracle).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let p1 = QuadraticParams::new(1).unwrap();
        let d = decompose(&p1, 4).unwrap();
        assert_eq!(d.terms.len(), 2);
        assert_eq!((d.terms[0].k, d.terms[1].k), (3, 1));
        let lp = sudler_product(&p1, 4).unwrap().log_value;
        assert!((d.product(&p1).unwrap().log_value - lp).abs() < 1e-12);

        let d = decompose(&p1, 8).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.terms[0].epsilon, 0.0);

        let p5 = QuadraticParams::new(5).unwrap();
        let d = decompose(&p5, 30).unwrap();
        assert_eq!(d.expansion.digits, vec![4, 0, 1]);
        let ks: Vec<usize> = d.terms.iter().map(|t| t.k).collect();
        assert_eq!(ks, vec![2, 0, 0, 0, 0]);
        let lp = sudler_product(&p5, 30).unwrap().log_value;
        assert!((d.product(&p5).unwrap().log_value - lp).abs() < 1e-8);
        assert!(decompose(&p5, 0).is_err());
    }

    #[test]
    fn closed_form_epsilon_matches_offset_product() {
        for b in 1..=5 {
            let p = QuadraticParams::new(b).unwrap();
            for n in [77u64, 1234, 9999, 31_415] {
                let d = decompose(&p, n).unwrap();
                for t in &d.terms {
                    let q = p.q(t.k).unwrap();
                    let by_offset = offset_product(&p, t.offset, q, Turn::ZERO).log_value;
                    let by_eps = shifted_product(&p, t.k, t.epsilon).unwrap().log_value;
                    assert!((by_offset - by_eps).abs() < 1e-9, "b={b} N={n} {t:?}");
                }
            }
        }
    }

    #[test]
    fn decomposition_epsilons_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for b in 1..=5 {
            let p = QuadraticParams::new(b).unwrap();
            let (lo, hi) = epsilon_bounds(&p);
            for _ in 0..5000 {
                let n = rng.random_range(1..10_000_000u64);
                for t in decompose(&p, n).unwrap().terms {
                    assert!(lo <= t.epsilon && t.epsilon <= hi, "b={b} N={n} eps={}", t.epsilon);
                }
            }
        }
    }

    #[test]
    fn mirror_examples() {
        let p = QuadraticParams::new(1).unwrap();
        let m = mirror_epsilons(&p, 8, 54).unwrap();
        assert_eq!(m.remainder, 0);
        assert!(m.terms.is_empty());

        // n = 8, N = F_9 = 34; reconstruct P_34 from P_{F_10 - 1} = P_54.
        let m = mirror_epsilons(&p, 8, 34).unwrap();
        let big = sudler_product(&p, 54).unwrap().log_value;
        let rec = big - m.product(&p).unwrap().log_value;
        assert!((rec - sudler_product(&p, 34).unwrap().log_value).abs() < 1e-8);
        let direct = mirror_product(&p, 8, m.remainder).unwrap().log_value;
        assert!((direct - m.product(&p).unwrap().log_value).abs() < 1e-10);
        assert!(mirror_epsilons(&p, 8, 55).is_err());
    }

    #[test]
    fn golden_mirror_epsilons_stay_in_range() {
        let p = QuadraticParams::new(1).unwrap();
        for n in 2..=16 {
            let (qn, qn1) = (p.q(n).unwrap(), p.q(n + 1).unwrap());
            for big_n in qn..qn1 {
                for t in mirror_epsilons(&p, n, big_n).unwrap().terms {
                    assert!(-0.19 < t.epsilon && t.epsilon < 0.3, "n={n} N={big_n} {t:?}");
                }
            }
        }
    }

    #[test]
    fn second_derivative_is_negative_and_matches_differences() {
        let p = QuadraticParams::new(1).unwrap();
        for k in [3usize, 8, 15] {
            for &eps in &[-0.1, 0.0, 0.2] {
                let d2 = log_second_derivative(&p, k, eps).unwrap();
                assert!(d2 < 0.0);
                let h = 1e-5;
                let f = |e: f64| shifted_product(&p, k, e).unwrap().log_value;
                let fd = (f(eps + h) - 2.0 * f(eps) + f(eps - h)) / (h * h);
                assert!(((fd - d2) / d2).abs() < 1e-4, "k={k} eps={eps} {fd} {d2}");
            }
        }
        let k = 4;
        let zero = -(p.q(k).unwrap() as f64) * p.delta(k).unwrap();
        let near = log_second_derivative(&p, k, zero + 1e-6).unwrap();
        let far = log_second_derivative(&p, k, zero + 1e-2).unwrap();
        assert!(near.abs() > 1e6 * far.abs().min(1.0));
    }

    #[test]
    fn roots_of_unity_product() {
        for q in 2..=400u64 {
            let lp: f64 = (1..q).map(|n| (2.0 * sin_pi(n as f64 / q as f64 - (n as f64 / q as f64).round())).abs().ln()).sum();
            assert!((lp - (q as f64).ln()).abs() < 1e-12);
        }
    }
}
