//! Ostrowski numeration for `beta(b) = [0; b, b, ...]`.
//!
//! Indexing used throughout:
//!
//! | digit        | storage        | multiplies |
//! |--------------|----------------|------------|
//! | `b_1`        | `digits[0]`    | `q_0 = 1`  |
//! | `b_2`        | `digits[1]`    | `q_1 = b`  |
//! | `b_(l+1)`    | `digits[l]`    | `q_l`      |
//!
//! For `b = 1` the digit rules reduce to Zeckendorf's: digits in `{0, 1}`, `b_1 = 0`,
//! and no two adjacent ones.

use std::fmt;

use serde::Serialize;

use crate::error::{Result, SudlerError};
use crate::quadratic::denominators_through;

/// Digits `b_1, b_2, ..., b_(n+1)` of an integer in the numeration system of `beta(b)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct OstrowskiExpansion {
    pub b: u32,
    pub digits: Vec<u32>,
}

/// First digit rule broken by an [`OstrowskiExpansion`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DigitViolation {
    /// `b_1 >= b`.
    FirstDigitTooLarge { digit: u32 },
    /// `b_l > b` for some `l >= 2` (1-based position).
    DigitTooLarge { position: usize, digit: u32 },
    /// `b_l = b` while `b_(l-1) != 0`.
    MaxDigitAfterNonzero { position: usize },
}

impl fmt::Display for DigitViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DigitViolation::FirstDigitTooLarge { digit } => {
                write!(f, "b_1 = {digit} is not below b")
            }
            DigitViolation::DigitTooLarge { position, digit } => {
                write!(f, "b_{position} = {digit} exceeds b")
            }
            DigitViolation::MaxDigitAfterNonzero { position } => {
                write!(f, "b_{position} = b but b_{} is nonzero", position - 1)
            }
        }
    }
}

impl OstrowskiExpansion {
    pub fn new(b: u32, digits: Vec<u32>) -> Self {
        OstrowskiExpansion { b, digits }
    }

    /// `b_l` (1-based); zero beyond the stored length.
    pub fn digit(&self, l: usize) -> u32 {
        if l == 0 {
            return 0;
        }
        self.digits.get(l - 1).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Index `n` of the highest nonzero digit `b_(n+1)`, i.e. `q_n <= N < q_(n+1)`.
    pub fn top_index(&self) -> Option<usize> {
        self.digits.iter().rposition(|&d| d != 0)
    }

    /// The same number with leading zeros appended up to `n + 1` digits.
    pub fn pad(&self, n: usize) -> OstrowskiExpansion {
        let mut digits = self.digits.clone();
        if digits.len() < n + 1 {
            digits.resize(n + 1, 0);
        }
        OstrowskiExpansion { b: self.b, digits }
    }

    pub fn trimmed(&self) -> OstrowskiExpansion {
        let end = self.top_index().map_or(0, |n| n + 1);
        OstrowskiExpansion {
            b: self.b,
            digits: self.digits[..end].to_vec(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.digits.last().is_none_or(|&d| d != 0)
    }

    pub fn validate(&self) -> std::result::Result<(), DigitViolation> {
        let b = self.b;
        for (idx, &d) in self.digits.iter().enumerate() {
            let position = idx + 1;
            if position == 1 {
                if d >= b {
                    return Err(DigitViolation::FirstDigitTooLarge { digit: d });
                }
                continue;
            }
            if d > b {
                return Err(DigitViolation::DigitTooLarge { position, digit: d });
            }
            if d == b && self.digits[idx - 1] != 0 {
                return Err(DigitViolation::MaxDigitAfterNonzero { position });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }
}

/// Greedy Ostrowski expansion of `n`; the result has no leading zeros.
///
/// For `b = 1` the two equal denominators `q_0 = q_1 = 1` are resolved by always
/// using `q_1`, which keeps `b_1 = 0`.
pub fn expand(n: u64, b: u32) -> Result<OstrowskiExpansion> {
    if b == 0 {
        return Err(SudlerError::InvalidBase(b));
    }
    if n == 0 {
        return Ok(OstrowskiExpansion::new(b, Vec::new()));
    }
    let q = denominators_through(b, n);
    let top = q
        .iter()
        .rposition(|&v| v <= n)
        .expect("q_0 = 1 <= n");
    let mut digits = vec![0u32; top + 1];
    let mut rest = n;
    for l in (0..=top).rev() {
        let d = rest / q[l];
        digits[l] = d as u32;
        rest -= d * q[l];
    }
    debug_assert_eq!(rest, 0);
    Ok(OstrowskiExpansion::new(b, digits))
}

/// `sum b_(l+1) q_l` in checked 64-bit arithmetic.
pub fn evaluate(e: &OstrowskiExpansion) -> Result<u64> {
    if e.is_empty() {
        return Ok(0);
    }
    let q = denominators_through(e.b, u64::MAX);
    let mut total = 0u64;
    for (l, &d) in e.digits.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let ql = *q.get(l).ok_or_else(|| {
            SudlerError::Overflow(format!("q_{l} for b = {} exceeds 2^63", e.b))
        })?;
        total = (d as u64)
            .checked_mul(ql)
            .and_then(|v| total.checked_add(v))
            .ok_or_else(|| SudlerError::Overflow("Ostrowski value exceeds u64".into()))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!(expand(0, 3).unwrap().is_empty());
        assert_eq!(expand(30, 5).unwrap().digits, vec![4, 0, 1]);
        // 20 = 13 + 5 + 2 = q_6 + q_4 + q_2.
        assert_eq!(expand(20, 1).unwrap().digits, vec![0, 0, 1, 0, 1, 0, 1]);
        assert_eq!(evaluate(&OstrowskiExpansion::new(5, vec![])).unwrap(), 0);
        assert_eq!(evaluate(&OstrowskiExpansion::new(5, vec![4, 0, 1])).unwrap(), 30);
    }

    #[test]
    fn violations_are_reported() {
        let e = OstrowskiExpansion::new(5, vec![5]);
        assert_eq!(e.validate(), Err(DigitViolation::FirstDigitTooLarge { digit: 5 }));
        let e = OstrowskiExpansion::new(5, vec![1, 5]);
        assert_eq!(e.validate(), Err(DigitViolation::MaxDigitAfterNonzero { position: 2 }));
        let e = OstrowskiExpansion::new(1, vec![0, 1, 1]);
        assert_eq!(e.validate(), Err(DigitViolation::MaxDigitAfterNonzero { position: 3 }));
        let e = OstrowskiExpansion::new(2, vec![0, 3]);
        assert_eq!(e.validate(), Err(DigitViolation::DigitTooLarge { position: 2, digit: 3 }));
        assert!(OstrowskiExpansion::new(5, vec![0, 5, 0, 5]).is_valid());
    }

    #[test]
    fn exhaustive_round_trip() {
        for b in 1..=5u32 {
            for n in 0..=1_000_000u64 {
                let e = expand(n, b).unwrap();
                assert!(e.is_valid(), "b={b} n={n}");
                assert!(e.is_canonical());
                assert_eq!(evaluate(&e).unwrap(), n);
            }
        }
    }

    fn enumerate_valid(b: u32, len: usize, prefix: &mut Vec<u32>, out: &mut Vec<u64>, q: &[u64]) {
        if prefix.len() == len {
            out.push(prefix.iter().zip(q).map(|(&d, &ql)| d as u64 * ql).sum());
            return;
        }
        let pos = prefix.len() + 1;
        let hi = if pos == 1 { b - 1 } else { b };
        for d in 0..=hi {
            if pos >= 2 && d == b && prefix[pos - 2] != 0 {
                continue;
            }
            prefix.push(d);
            enumerate_valid(b, len, prefix, out, q);
            prefix.pop();
        }
    }

    #[test]
    fn representation_is_unique() {
        for b in 1..=5u32 {
            let q = denominators_through(b, 100_000);
            let len = q.len() - 1;
            let mut values = Vec::new();
            enumerate_valid(b, len, &mut Vec::new(), &mut values, &q);
            // Valid strings of length L are in bijection with 0..q_L.
            assert_eq!(values.len() as u64, q[len]);
            values.sort_unstable();
            for (i, v) in values.iter().enumerate() {
                assert_eq!(*v, i as u64, "b = {b}");
            }
        }
    }

    #[test]
    fn padding_keeps_the_value() {
        let e = expand(30, 5).unwrap();
        let p = e.pad(6);
        assert_eq!(p.len(), 7);
        assert!(!p.is_canonical() && p.is_valid());
        assert_eq!(evaluate(&p).unwrap(), 30);
        assert_eq!(p.trimmed(), e);
        assert_eq!(e.top_index(), Some(2));
    }

    proptest! {
        #[test]
        fn round_trip_large(n in 0u64..(1u64 << 62), b in 1u32..=20) {
            let e = expand(n, b).unwrap();
            prop_assert!(e.is_valid());
            prop_assert_eq!(evaluate(&e).unwrap(), n);
        }
    }
}
