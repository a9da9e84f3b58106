//! Case labels for the factors `P_{n,i}` of `P_N / P_{q_n}` when `b = 5`.
//!
//! With Ostrowski digits `b_1, ..., b_{n+1}` of `N` (and `b_0 = 0`), factor `i` collects
//! the copies `a >= 1` of block `q_{n-i}` and, when `b_{n-i} != 0`, the first copy of
//! block `q_{n-i-1}`:
//!
//! `P_{n,i} = prod_{a=1}^{b_{n-i+1}-1} P_{q_{n-i}}(eps_{i,a}) * P_{q_{n-i-1}}(eps_{i+1,0})^[b_{n-i} != 0]`.
//!
//! The label of a factor depends on `(b_{n-i}, b_{n-i+1}, b_{n-i+2}, b_{n-i+3})`, with
//! special rules for the rows `i = n - 1` and `i = n`. Two labels may fall below one:
//! `2b`, which pairs with the factor two rows up, and the row `n - 1` variants of
//! Case 2, which pair with a factor located by the lower digits.

use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

use super::tables::TableValues;
use super::{MarginTracker, Scalar, VerificationReport};
use crate::error::{Result, SudlerError};
use crate::ostrowski::OstrowskiExpansion;
use crate::sudler::{decompose, ShiftedCache};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseLabel {
    C1,
    C2a,
    C2b,
    C3,
    C4,
    C5,
    C6a,
    C6b,
    C6c,
    C6d,
    C6e,
    /// Row `n - 1` with `b_1 != 0`.
    C1p,
    C2ap,
    C2bp,
    C2cp,
    C3p,
    C4p,
    C5p,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        use CaseLabel::*;
        match self {
            C1 => "1",
            C2a => "2a",
            C2b => "2b",
            C3 => "3",
            C4 => "4",
            C5 => "5",
            C6a => "6a",
            C6b => "6b",
            C6c => "6c",
            C6d => "6d",
            C6e => "6e",
            C1p => "1'",
            C2ap => "2a'",
            C2bp => "2b'",
            C2cp => "2c'",
            C3p => "3'",
            C4p => "4'",
            C5p => "5'",
        }
    }

    fn case6(copies: u32) -> Self {
        [CaseLabel::C6a, CaseLabel::C6a, CaseLabel::C6b, CaseLabel::C6c, CaseLabel::C6d, CaseLabel::C6e][copies as usize]
    }

    fn is_case6_nonempty(self) -> bool {
        matches!(self, CaseLabel::C6b | CaseLabel::C6c | CaseLabel::C6d | CaseLabel::C6e)
    }
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CaseLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Case bounds assembled from table values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseBounds {
    pub values: TableValues,
}

/// Where a factor sits; the same label can carry different bounds per row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Row {
    Inner,
    Penultimate,
    Last,
}

impl CaseBounds {
    pub fn new(values: TableValues) -> Self {
        CaseBounds { values }
    }

    fn bound(&self, label: CaseLabel, row: Row, copies: u32) -> f64 {
        use CaseLabel::*;
        let v = &self.values;
        if row == Row::Last {
            return v.final_row.powi(copies.saturating_sub(1) as i32);
        }
        match label {
            C1 => v.t1_next[0],
            C2a => v.case2a,
            C2b => v.case2b,
            C3 => v.copies(1) * v.t1_next[2],
            C4 => v.copies(2) * v.t1_next[3],
            C5 => v.copies(3) * v.t1_next[4],
            C6a => 1.0,
            C6b => v.copies(1),
            C6c => v.copies(2),
            C6d => v.copies(3),
            C6e => v.copies(4),
            C1p => v.t2_first[0],
            C2ap | C2bp => v.t2_first[1],
            C2cp => v.row_n1_all_small,
            C3p => v.copies(1) * v.t2_first[2],
            C4p => v.copies(2) * v.t2_first[3],
            C5p => v.copies(3) * v.t2_first[4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseFactor {
    pub n: usize,
    pub i: usize,
    pub case_label: CaseLabel,
    pub value_lower_bound: f64,
    /// `(b_{n-i}, b_{n-i+1}, b_{n-i+2}, b_{n-i+3})`.
    pub digits_context: [u32; 4],
    /// `log P_{n,i}` evaluated directly.
    pub log_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedFactor {
    pub i: usize,
    pub partner: usize,
    /// Lower bound of the partner as used in the pair (can be sharper than its own).
    pub partner_bound: f64,
    pub bound_product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseAnalysis {
    pub n_value: u64,
    pub n: usize,
    pub factors: Vec<CaseFactor>,
    pub pairs: Vec<PairedFactor>,
    /// `sum_i log P_{n,i} = log(P_N / P_{q_n})`.
    pub log_product: f64,
    /// Smallest bound among unpaired factors and pair products.
    pub min_group_bound: f64,
    /// Smallest `log P_{n,i} - log(bound)`.
    pub min_factor_margin: f64,
}

impl CaseAnalysis {
    /// The bound argument closes (`min_group_bound >= 1`), every factor meets its
    /// bound to within `tolerance` in the log domain, and the product is at least one.
    pub fn pass(&self, tolerance: f64) -> bool {
        self.min_group_bound >= 1.0 && self.min_factor_margin >= -tolerance && self.log_product >= -tolerance
    }
}

/// Digit accessor with `b_0 = 0` and zeros above the leading digit.
struct Digits<'a>(&'a OstrowskiExpansion);

impl Digits<'_> {
    fn get(&self, l: usize) -> u32 {
        if l == 0 {
            0
        } else {
            self.0.digit(l)
        }
    }
}

fn inner_label(d: [u32; 4]) -> Result<CaseLabel> {
    use CaseLabel::*;
    let [d0, d1, d2, d3] = d;
    if d0 == 0 {
        return Ok(CaseLabel::case6(d1));
    }
    Ok(match d1 {
        0 => C1,
        1 if d2 >= 1 || d3 <= 1 => C2a,
        1 => C2b,
        2 => C3,
        3 => C4,
        4 => C5,
        _ => {
            return Err(SudlerError::Inconsistent(format!(
                "digit context {d:?} is not admissible"
            )))
        }
    })
}

fn penultimate_label(d: [u32; 4], digits: &Digits<'_>, n: usize) -> Result<(CaseLabel, Option<usize>)> {
    use CaseLabel::*;
    let [b1, b2, _, _] = d;
    if b1 == 0 {
        return Ok((CaseLabel::case6(b2), None));
    }
    let label = match b2 {
        0 => C1p,
        1 => {
            let ks = 3..=n - 1;
            if let Some(k) = ks.clone().find(|&k| digits.get(k) == 0) {
                return Ok((C2ap, Some(n - k + 1)));
            }
            if let Some(k) = ks.clone().find(|&k| digits.get(k) >= 3) {
                return Ok((C2bp, Some(n - k + 1)));
            }
            return Ok((C2cp, Some(n - 2)));
        }
        2 => C3p,
        3 => C4p,
        4 => C5p,
        _ => {
            return Err(SudlerError::Inconsistent(format!(
                "digit context {d:?} is not admissible"
            )))
        }
    };
    Ok((label, None))
}

/// Labels every factor `P_{n,i}` of `N` and checks the bound argument.
///
/// Requires `b = 5` and `N >= q_6` (so `n >= 6`). A partner that does not carry the
/// label the argument relies on is reported as an inconsistency.
pub fn classify_cases(cache: &mut ShiftedCache, n_value: u64, bounds: &CaseBounds) -> Result<CaseAnalysis> {
    let params = cache.params().clone();
    if params.b() != 5 {
        return Err(SudlerError::Domain("the case analysis is stated for b = 5".into()));
    }
    let dec = decompose(&params, n_value)?;
    let n = dec.top;
    if n < 6 {
        return Err(SudlerError::Domain(format!(
            "N = {n_value} is below q_6; the case analysis needs n >= 6"
        )));
    }
    let digits = Digits(&dec.expansion);

    let mut logs = vec![0.0; n + 1];
    for t in &dec.terms {
        let i = if t.copy >= 1 {
            t.block
        } else if t.block >= 1 {
            t.block - 1
        } else {
            // The first copy of the top block is P_{q_n} itself.
            continue;
        };
        logs[i] += cache.get(t.k, t.epsilon)?.log_value;
    }

    let mut factors = Vec::with_capacity(n + 1);
    let mut wanted: Vec<(usize, usize)> = Vec::new();
    for i in 0..=n {
        let top = n + 1 - i;
        let d = [digits.get(n - i), digits.get(top), digits.get(top + 1), digits.get(top + 2)];
        let (label, row) = if i + 2 <= n {
            (inner_label(d)?, Row::Inner)
        } else if i + 1 == n {
            let (label, partner) = penultimate_label(d, &digits, n)?;
            if let Some(j) = partner {
                wanted.push((i, j));
            }
            (label, Row::Penultimate)
        } else {
            (CaseLabel::case6(d[1]), Row::Last)
        };
        if label == CaseLabel::C2b {
            if i < 2 {
                return Err(SudlerError::Inconsistent(format!("Case 2b at row {i} has no partner")));
            }
            wanted.push((i, i - 2));
        }
        factors.push(CaseFactor {
            n,
            i,
            case_label: label,
            value_lower_bound: bounds.bound(label, row, d[1]),
            digits_context: d,
            log_value: logs[i],
        });
    }

    let mut used = BTreeSet::new();
    let mut pairs = Vec::new();
    for &(i, j) in &wanted {
        let own = &factors[i];
        let partner = &factors[j];
        use CaseLabel::*;
        let ok = match own.case_label {
            C2b => partner.case_label.is_case6_nonempty(),
            C2ap => partner.case_label == C1,
            C2bp => matches!(partner.case_label, C4 | C5),
            C2cp => matches!(partner.case_label, C2a | C2b | C3),
            _ => false,
        };
        if !ok || !used.insert(j) {
            return Err(SudlerError::Inconsistent(format!(
                "factor {i} in Case {} cannot pair with factor {j} in Case {} (N = {n_value})",
                own.case_label, partner.case_label
            )));
        }
        let partner_bound = if own.case_label == C2cp && partner.case_label != C3 {
            bounds.values.row_n2_all_small
        } else {
            partner.value_lower_bound
        };
        pairs.push(PairedFactor {
            i,
            partner: j,
            partner_bound,
            bound_product: own.value_lower_bound * partner_bound,
        });
    }

    let in_pair: BTreeSet<usize> = pairs.iter().flat_map(|p| [p.i, p.partner]).collect();
    let singles = factors
        .iter()
        .filter(|f| !in_pair.contains(&f.i))
        .map(|f| f.value_lower_bound);
    let min_group_bound = singles
        .chain(pairs.iter().map(|p| p.bound_product))
        .fold(f64::INFINITY, f64::min);
    let mut min_factor_margin = factors
        .iter()
        .map(|f| f.log_value - f.value_lower_bound.ln())
        .fold(f64::INFINITY, f64::min);
    // Sharpened partner bounds must hold for the numeric partner as well.
    for p in &pairs {
        min_factor_margin = min_factor_margin.min(factors[p.partner].log_value - p.partner_bound.ln());
    }
    Ok(CaseAnalysis {
        n_value,
        n,
        log_product: logs.iter().sum(),
        factors,
        pairs,
        min_group_bound,
        min_factor_margin,
    })
}

/// Runs [`classify_cases`] on `samples` values of `N` drawn uniformly from
/// `[q_6, q_10)` with a seeded generator.
///
/// The margin of one `N` is the smallest of `log(min_group_bound)`, the log product
/// and the per-factor margin; the report passes when every sample passes.
pub fn sample_cases(cache: &mut ShiftedCache, bounds: &CaseBounds, samples: usize, seed: u64) -> Result<VerificationReport> {
    use rand::{Rng, SeedableRng};
    const TOLERANCE: f64 = 1e-9;
    let params = cache.params().clone();
    let (lo, hi) = (params.q(6)?, params.q(10)?);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = MarginTracker::new();
    let mut all = true;
    for _ in 0..samples {
        let n = rng.random_range(lo..hi);
        let a = classify_cases(cache, n, bounds)?;
        all &= a.pass(TOLERANCE);
        tracker.observe(a.min_group_bound.ln().min(a.log_product).min(a.min_factor_margin), n);
    }
    let at = tracker.at.map_or(Scalar::from("none"), Scalar::from);
    let mut report = VerificationReport::from_margin("cases", 5, [Scalar::from(lo), Scalar::from(hi - 1)], tracker.min, at, -TOLERANCE);
    report.pass = all && samples > 0;
    Ok(report)
}
