//! Datasets behind the standard plots.
//!
//! | id | content |
//! |----|---------|
//! | 1 | `log P_N(phi)` for `1 <= N <= F_14 - 1 = 376` |
//! | 2 | `log P_N` for `phi` on `F_13..=F_14` and `beta(5)` on `q_3..=q_4` |
//! | 3 | `log P_N` for `beta(6)` on `q_2..q_3` and `beta(20)` on `q_1..q_2` |
//! | 4 | `P`, `P*` and `G_T` for `phi` on `[-0.4, 0.6]` |
//! | 5 | `P`, `P*` and `G_T` for `beta(5)` on `[-0.2, 0.95]` |

use serde::Serialize;

use crate::envelope::{Envelope, EnvelopeConfig};
use crate::error::{Result, SudlerError};
use crate::quadratic::QuadraticParams;
use crate::sudler::SudlerSequence;

pub const FIGURE_IDS: std::ops::RangeInclusive<u32> = 1..=5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SequenceRow {
    pub b: u32,
    pub n: u64,
    pub log_p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub b: u32,
    pub eps: f64,
    pub p: f64,
    pub p_star: f64,
    pub g_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "rows", rename_all = "snake_case")]
pub enum Dataset {
    Sequence(Vec<SequenceRow>),
    Envelope(Vec<EnvelopeRow>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Figure {
    pub id: u32,
    pub title: &'static str,
    /// Whether rows carry several bases (and so need a `b` column).
    pub multi_base: bool,
    pub dataset: Dataset,
}

/// Default number of grid points for the envelope figures.
pub const DEFAULT_POINTS: usize = 61;

/// `log P_N` over the inclusive range `lo..=hi`.
pub fn sequence_rows(b: u32, lo: u64, hi: u64) -> Result<Vec<SequenceRow>> {
    let params = QuadraticParams::new(b)?;
    let rows = SudlerSequence::range(&params, lo, hi + 1)?
        .map(|(n, log_p)| SequenceRow { b, n, log_p })
        .collect();
    Ok(rows)
}

/// The envelope of base `b` sampled at `points` evenly spaced values on `[lo, hi]`.
pub fn envelope_rows(b: u32, lo: f64, hi: f64, points: usize) -> Result<Vec<EnvelopeRow>> {
    if points < 2 {
        return Err(SudlerError::Domain("an envelope figure needs at least two points".into()));
    }
    let env = Envelope::new(EnvelopeConfig::for_base(b)?)?;
    (0..points)
        .map(|j| {
            let eps = lo + (hi - lo) * j as f64 / (points - 1) as f64;
            let v = env.eval(eps)?;
            Ok(EnvelopeRow { b, eps, p: v.p, p_star: v.p_star, g_t: v.g_t })
        })
        .collect()
}

fn q(b: u32, k: usize) -> Result<u64> {
    QuadraticParams::new(b)?.q(k)
}

/// Builds figure `id`; `points` overrides the grid size of the envelope figures.
pub fn figure(id: u32, points: Option<usize>) -> Result<Figure> {
    let points = points.unwrap_or(DEFAULT_POINTS);
    let (title, multi_base, dataset) = match id {
        1 => ("P_N(phi), 1 <= N <= 376", false, Dataset::Sequence(sequence_rows(1, 1, 376)?)),
        2 => {
            // F_13 = q_12 and F_14 = q_13 for the golden ratio.
            let mut rows = sequence_rows(1, q(1, 12)?, q(1, 13)?)?;
            rows.extend(sequence_rows(5, q(5, 3)?, q(5, 4)?)?);
            ("P_N(phi) on F_13..=F_14 and P_N(beta(5)) on q_3..=q_4", true, Dataset::Sequence(rows))
        }
        3 => {
            let mut rows = sequence_rows(6, q(6, 2)?, q(6, 3)? - 1)?;
            rows.extend(sequence_rows(20, q(20, 1)?, q(20, 2)? - 1)?);
            ("P_N(beta(6)) on q_2..q_3 and P_N(beta(20)) on q_1..q_2", true, Dataset::Sequence(rows))
        }
        4 => ("P, P* and G_T for phi", false, Dataset::Envelope(envelope_rows(1, -0.4, 0.6, points)?)),
        5 => ("P, P* and G_T for beta(5)", false, Dataset::Envelope(envelope_rows(5, -0.2, 0.95, points)?)),
        _ => {
            return Err(SudlerError::Domain(format!(
                "unknown figure id {id}; expected 1..=5"
            )))
        }
    };
    Ok(Figure { id, title, multi_base, dataset })
}
