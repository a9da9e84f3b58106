//! Finite verification runs.
//!
//! Every check produces a [`VerificationReport`]: the smallest slack found over the
//! checked range, where it occurred, and the floating-point budget the slack has to
//! beat. A check passes only when its margin exceeds that budget.

use serde::Serialize;

pub mod cases;
pub mod extrema;
pub mod lemmas;
pub mod tables;

pub use cases::{classify_cases, sample_cases, CaseAnalysis, CaseBounds, CaseFactor, CaseLabel, PairedFactor};
pub use extrema::{
    growth_ratio_check, list_violations, mirror_identity_check, mirror_ineq3_check, reflection_probe,
    verify_extrema, window_extremes, ExtremaReport, ReflectionProbe, Violation, WindowExtremes,
};
pub use lemmas::{
    check_lemma7, check_lemma8, convergence_probe, proof_constants, psi, ConvergenceProbe,
    ProofConstants,
};
pub use tables::{reproduce_tables, u_bound, TableCell, TableReproduction, TableValues};

/// A JSON scalar: integer, real or label.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<u64> for Scalar {
    fn from(v: u64) -> Self {
        Scalar::Int(v as i64)
    }
}

impl From<usize> for Scalar {
    fn from(v: usize) -> Self {
        Scalar::Int(v as i64)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Real(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Text(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Text(v)
    }
}

impl std::fmt::Display for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Real(v) => write!(f, "{v}"),
            Scalar::Text(v) => f.write_str(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check_id: String,
    pub b: u32,
    pub range: [Scalar; 2],
    pub pass: bool,
    pub min_margin: f64,
    pub margin_at: Scalar,
    pub fp_error_budget: f64,
}

impl VerificationReport {
    /// A report whose verdict is `min_margin > fp_error_budget`.
    pub fn from_margin(
        check_id: impl Into<String>,
        b: u32,
        range: [Scalar; 2],
        min_margin: f64,
        margin_at: Scalar,
        fp_error_budget: f64,
    ) -> Self {
        VerificationReport {
            check_id: check_id.into(),
            b,
            range,
            pass: min_margin > fp_error_budget,
            min_margin,
            margin_at,
            fp_error_budget,
        }
    }

    /// Whether the margin is too small to be decided either way.
    pub fn is_ambiguous(&self) -> bool {
        self.min_margin.abs() <= self.fp_error_budget
    }
}

/// Running minimum of a margin with its witness.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginTracker<W> {
    pub min: f64,
    pub at: Option<W>,
}

impl<W: Clone> Default for MarginTracker<W> {
    fn default() -> Self {
        MarginTracker {
            min: f64::INFINITY,
            at: None,
        }
    }
}

impl<W: Clone> MarginTracker<W> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, margin: f64, at: W) {
        // A NaN margin is sticky so that it surfaces as a failure.
        if self.min.is_nan() {
            return;
        }
        if margin.is_nan() || margin < self.min || self.at.is_none() {
            self.min = margin;
            self.at = Some(at);
        }
    }

    /// Merge another tracker; ties keep `self`, so merging in a fixed order is
    /// deterministic.
    pub fn merge(&mut self, other: &MarginTracker<W>) {
        if let Some(at) = &other.at {
            self.observe(other.min, at.clone());
        }
    }
}

/// Summary line for a batch of reports.
pub fn all_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_keeps_minimum_and_witness() {
        let mut t = MarginTracker::new();
        t.observe(3.0, 1u64);
        t.observe(1.0, 2);
        t.observe(2.0, 3);
        assert_eq!((t.min, t.at), (1.0, Some(2)));
        let mut u = MarginTracker::new();
        u.observe(0.5, 9);
        t.merge(&u);
        assert_eq!((t.min, t.at), (0.5, Some(9)));
    }

    #[test]
    fn tracker_is_poisoned_by_nan() {
        let mut t = MarginTracker::new();
        t.observe(1.0, 1u64);
        t.observe(f64::NAN, 2);
        t.observe(0.0, 3);
        assert!(t.min.is_nan());
        assert_eq!(t.at, Some(2));
    }

    #[test]
    fn report_json_shape() {
        let r = VerificationReport::from_margin("x", 1, [1u64.into(), 20u64.into()], 0.5, 7u64.into(), 1e-12);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["range"], serde_json::json!([1, 20]));
        assert_eq!(v["pass"], true);
        assert_eq!(v["margin_at"], 7);
    }
}
