//! The quadratic irrational `beta(b) = [0; b, b, b, ...] = (sqrt(b^2 + 4) - b) / 2`,
//! its convergents and fractional-part arithmetic.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Result, SudlerError};
use crate::phase::Turn;

/// Largest base accepted by [`QuadraticParams::new`].
pub const MAX_BASE: u32 = 20;

/// Largest integer argument accepted by [`frac_part`].
pub const MAX_MULTIPLIER: u64 = 1 << 63;

fn check_base(b: u32) -> Result<()> {
    if (1..=MAX_BASE).contains(&b) {
        Ok(())
    } else {
        Err(SudlerError::InvalidBase(b))
    }
}

/// `floor(beta(b) * 2^frac_bits)`.
fn beta_scaled(b: u32, frac_bits: u32) -> BigUint {
    let b_big = BigUint::from(b);
    let disc = (&b_big * &b_big + 4u32) << (2 * frac_bits);
    let root = disc.sqrt();
    (root - (b_big << frac_bits)) >> 1u32
}

fn biguint_to_f64(x: &BigUint, frac_bits: u32) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64_digits().first().copied().unwrap_or(0);
    top as f64 * 2f64.powi(shift as i32 - frac_bits as i32)
}

/// `beta(b)` as a 128-bit fixed-point fraction, rounded down, so the absolute
/// error is below `2^-127`.
pub fn beta_value(b: u32) -> Result<Turn> {
    check_base(b)?;
    let bits = beta_scaled(b, 128);
    let digits = bits.to_u64_digits();
    let lo = digits.first().copied().unwrap_or(0) as u128;
    let hi = digits.get(1).copied().unwrap_or(0) as u128;
    Ok(Turn::from_bits(lo | (hi << 64)))
}

/// One row of a [`ConvergentTable`].
///
/// `delta` is the signed-convergent distance `|q_k beta - p_k| = beta^(k+1)`. For
/// `b >= 2` this coincides with the distance to the nearest integer. For `b = 1`
/// and `k = 0` it is `beta = 0.618...` rather than `||beta|| = 0.382...`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Convergent {
    pub k: usize,
    pub q: u64,
    pub p: u64,
    #[serde(skip)]
    pub delta_turn: Turn,
    pub delta: f64,
}

/// Denominators `q_k`, numerators `p_k` and distances `delta_k` for `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergentTable {
    pub b: u32,
    pub rows: Vec<Convergent>,
}

impl ConvergentTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn q(&self, k: usize) -> Option<u64> {
        self.rows.get(k).map(|r| r.q)
    }

    pub fn denominators(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.q).collect()
    }

    /// Largest index `k` with `q_k <= n`; `None` when `n == 0`.
    pub fn index_below(&self, n: u64) -> Option<usize> {
        if n == 0 {
            return None;
        }
        // q_0 = 1 and for b = 1 also q_1 = 1; the greatest such index is wanted.
        self.rows.iter().rposition(|r| r.q <= n)
    }
}

/// The denominators `q_0, q_1, ...` up to and including the first one exceeding
/// `bound`, or all of them below `2^63` if that comes first.
pub fn denominators_through(b: u32, bound: u64) -> Vec<u64> {
    let mut q = vec![1u64];
    let mut prev = 0u64;
    loop {
        let last = *q.last().unwrap();
        if last > bound {
            break;
        }
        match (b as u64)
            .checked_mul(last)
            .and_then(|v| v.checked_add(prev))
            .filter(|&v| v < MAX_MULTIPLIER)
        {
            Some(next) => {
                prev = last;
                q.push(next);
            }
            None => break,
        }
    }
    q
}

fn build_table(b: u32, beta: Turn, k_max: Option<usize>) -> Result<ConvergentTable> {
    // delta_k as a float comes from a 256-bit product; the 128-bit phase loses
    // too much relative accuracy once q_k approaches 2^63.
    const WIDE: u32 = 256;
    let beta_wide = beta_scaled(b, WIDE);
    let mut rows = Vec::new();
    let (mut q_prev, mut q) = (0u64, 1u64);
    let (mut p_prev, mut p) = (1u64, 0u64);
    let mut k = 0usize;
    loop {
        let frac = beta.wrapping_mul(q);
        let delta_turn = if k.is_multiple_of(2) { frac } else { -frac };
        let qb = &beta_wide * q;
        let pb = BigUint::from(p) << WIDE;
        let wide = if qb >= pb { qb - pb } else { pb - qb };
        rows.push(Convergent {
            k,
            q,
            p,
            delta_turn,
            delta: biguint_to_f64(&wide, WIDE),
        });
        if k_max == Some(k) {
            break;
        }
        let next_q = (b as u64)
            .checked_mul(q)
            .and_then(|v| v.checked_add(q_prev))
            .filter(|&v| v < MAX_MULTIPLIER);
        let Some(next_q) = next_q else {
            if let Some(km) = k_max {
                return Err(SudlerError::Overflow(format!(
                    "q_{} for b = {b} does not fit below 2^63 (k_max = {km})",
                    k + 1
                )));
            }
            break;
        };
        let next_p = b as u64 * p + p_prev;
        q_prev = q;
        q = next_q;
        p_prev = p;
        p = next_p;
        k += 1;
    }
    Ok(ConvergentTable { b, rows })
}

/// Convergent table for `k = 0..=k_max`; fails if `q_{k_max}` would reach `2^63`.
pub fn convergents(b: u32, k_max: usize) -> Result<ConvergentTable> {
    let beta = beta_value(b)?;
    build_table(b, beta, Some(k_max))
}

/// `q_n` from the Binet-type formula `(beta^-(n+1) - (-beta)^(n+1)) / sqrt(b^2+4)`.
pub fn q_closed_form(b: u32, n: u32) -> Result<f64> {
    check_base(b)?;
    let s = ((b * b + 4) as f64).sqrt();
    let beta = (s - b as f64) / 2.0;
    let e = n as i32 + 1;
    let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
    Ok((beta.powi(-e) - sign * beta.powi(e)) / s)
}

/// Everything the product engines need about `beta(b)`.
///
/// Immutable after construction and cheap to share across threads.
#[derive(Clone, Debug)]
pub struct QuadraticParams {
    b: u32,
    beta: Turn,
    beta_f64: f64,
    sqrt_disc: f64,
    table: ConvergentTable,
}

impl QuadraticParams {
    pub fn new(b: u32) -> Result<Self> {
        let beta = beta_value(b)?;
        let beta_f64 = beta.to_f64();
        let table = build_table(b, beta, None)?;
        Ok(QuadraticParams {
            b,
            beta,
            beta_f64,
            // b + 2 beta avoids rounding sqrt(b^2 + 4) separately from beta.
            sqrt_disc: b as f64 + 2.0 * beta_f64,
            table,
        })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn beta(&self) -> Turn {
        self.beta
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta_f64
    }

    /// `sqrt(b^2 + 4)`.
    pub fn sqrt_disc(&self) -> f64 {
        self.sqrt_disc
    }

    /// All convergents with `q_k < 2^63`.
    pub fn table(&self) -> &ConvergentTable {
        &self.table
    }

    pub fn max_index(&self) -> usize {
        self.table.len() - 1
    }

    pub fn q(&self, k: usize) -> Result<u64> {
        self.table.q(k).ok_or_else(|| {
            SudlerError::Overflow(format!("q_{k} for b = {} exceeds 2^63", self.b))
        })
    }

    pub fn convergent(&self, k: usize) -> Result<&Convergent> {
        self.table.rows.get(k).ok_or_else(|| {
            SudlerError::Overflow(format!("q_{k} for b = {} exceeds 2^63", self.b))
        })
    }

    /// `delta_k = |q_k beta - p_k|`.
    pub fn delta(&self, k: usize) -> Result<f64> {
        Ok(self.convergent(k)?.delta)
    }

    /// `r beta mod 1` as an exact fixed-point phase.
    #[inline]
    pub fn phase(&self, r: u64) -> Turn {
        self.beta.wrapping_mul(r)
    }

    /// Convergent table for `k = 0..=k_max`.
    pub fn convergents(&self, k_max: usize) -> Result<ConvergentTable> {
        if k_max >= self.table.len() {
            return Err(SudlerError::Overflow(format!(
                "q_{k_max} for b = {} exceeds 2^63",
                self.b
            )));
        }
        Ok(ConvergentTable {
            b: self.b,
            rows: self.table.rows[..=k_max].to_vec(),
        })
    }
}

/// `{r beta}` in `[0, 1)` through a 128-bit fixed-point multiply.
///
/// Panics if `r >= 2^63`.
pub fn frac_part(r: u64, params: &QuadraticParams) -> f64 {
    assert!(r < MAX_MULTIPLIER, "frac_part: r = {r} is not below 2^63");
    params.phase(r).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_values() {
        assert_eq!(beta_value(1).unwrap().to_f64(), 0.6180339887498949);
        assert_eq!(beta_value(5).unwrap().to_f64(), 0.192_582_403_567_252);
        assert!((beta_value(2).unwrap().to_f64() - 0.414_213_562_373_095_03).abs() < 1e-17);
        assert_eq!(beta_value(0), Err(SudlerError::InvalidBase(0)));
        assert_eq!(beta_value(21), Err(SudlerError::InvalidBase(21)));
    }

    #[test]
    fn beta_solves_its_quadratic() {
        // beta^2 + b beta - 1 = 0 checked in exact 256-bit arithmetic on the fixed-point value.
        for b in 1..=MAX_BASE {
            let t = BigUint::from(beta_value(b).unwrap().bits());
            let one = BigUint::from(1u32) << 256u32;
            let lhs = &t * &t + (&t << 128u32) * b;
            let diff = if lhs > one { &lhs - &one } else { &one - &lhs };
            // |x^2 + b x - 1| <= (2 + b) * 2^-127 when |x - beta| <= 2^-127.
            let tol = BigUint::from(2 * (b + 2)) << 128u32;
            assert!(diff <= tol, "b = {b}");
        }
    }

    #[test]
    fn geometric_identity_partial_sums() {
        for b in 1..=5u32 {
            let p = QuadraticParams::new(b).unwrap();
            let beta = p.beta_f64();
            let mut s = 0.0;
            for j in 0..40 {
                s += b as f64 * beta.powi(2 * j + 1);
                let tail = b as f64 * beta.powi(2 * j + 3) / (1.0 - beta * beta);
                assert!((1.0 - s).abs() <= tail + 1e-15);
            }
        }
    }

    #[test]
    fn convergent_examples() {
        assert_eq!(
            convergents(5, 6).unwrap().denominators(),
            vec![1, 5, 26, 135, 701, 3640, 18901]
        );
        assert_eq!(
            convergents(1, 7).unwrap().denominators(),
            vec![1, 1, 2, 3, 5, 8, 13, 21]
        );
        assert_eq!(convergents(3, 2).unwrap().denominators(), vec![1, 3, 10]);
        assert!(matches!(convergents(1, 200), Err(SudlerError::Overflow(_))));
    }

    #[test]
    fn convergent_invariants() {
        for b in 1..=MAX_BASE {
            let p = QuadraticParams::new(b).unwrap();
            let rows = &p.table().rows;
            let beta = p.beta_f64();
            for w in rows.windows(2) {
                let (a, c) = (&w[0], &w[1]);
                let det = c.q as i128 * a.p as i128 - c.p as i128 * a.q as i128;
                assert_eq!(det, if c.k % 2 == 0 { 1 } else { -1 });
                assert_eq!(c.p, a.q);
                let qd = a.q as f64 * a.delta;
                if a.k >= 1 {
                    assert!(1.0 / (b as f64 + 2.0) <= qd, "b={b} k={}", a.k);
                    assert!(qd <= a.q as f64 / c.q as f64 + 1e-15, "b={b} k={} {qd}", a.k);
                    assert!(a.q as f64 / c.q as f64 <= 1.0 / b as f64);
                }
                let bp = beta.powi(a.k as i32 + 1);
                assert!((a.delta - bp).abs() <= 1e-20 * a.q as f64 + 4.0 * f64::EPSILON * bp);
            }
        }
    }

    #[test]
    fn multiplication_by_previous_denominator_is_a_bijection() {
        for b in 1..=5u32 {
            let t = QuadraticParams::new(b).unwrap();
            for w in t.table().rows.windows(2) {
                let (qm, q) = (w[0].q, w[1].q);
                if q > 10_000 {
                    break;
                }
                let mut seen = vec![false; q as usize];
                for n in 1..q {
                    let v = (qm * n % q) as usize;
                    assert!(v != 0 && !seen[v]);
                    seen[v] = true;
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_recursion() {
        assert!((q_closed_form(1, 7).unwrap() - 21.0).abs() < 1e-11);
        assert!((q_closed_form(5, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((q_closed_form(5, 6).unwrap() - 18901.0).abs() < 1e-8);
        for b in 1..=5u32 {
            let t = convergents(b, 25).unwrap();
            for r in &t.rows {
                let c = q_closed_form(b, r.k as u32).unwrap();
                assert!((c / r.q as f64 - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fractional_parts() {
        let p = QuadraticParams::new(1).unwrap();
        assert_eq!(frac_part(0, &p), 0.0);
        assert!((frac_part(1, &p) - 0.6180339887498949).abs() < 1e-16);
        assert!((frac_part(21, &p) - 0.9787137637477918).abs() < 1e-15);
        // 10^7 phi mod 1 from a 50-digit reference value.
        let f = frac_part(10_000_000, &p);
        assert!((f - 0.887_498_948_482_045_9).abs() < 1e-15, "{f}");
    }
}
