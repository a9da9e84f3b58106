//! Sudler products `prod 2|sin(pi r beta)|` for the quadratic irrationals
//! `beta(b) = [0; b, b, b, ...]`.
//!
//! The crate is organised bottom-up:
//!
//! * [`phase`] and [`accumulate`]: fixed-point phases, the sine kernel, compensated sums.
//! * [`quadratic`]: `beta(b)`, convergents `p_k / q_k` and `delta_k`.
//! * [`ostrowski`]: digit expansions in the numeration system of `beta(b)`.
//! * [`sudler`]: direct, incremental, shifted and decomposed products.
//! * [`limit`]: the limit function `G_beta` and its truncation bound.
//! * [`envelope`]: computable lower envelopes `P` and `P*` for shifted products.
//! * [`verify`]: finite verification runs and reports.
//! * [`figures`]: datasets behind the standard plots.

pub mod accumulate;
pub mod envelope;
pub mod figures;
pub mod error;
pub mod limit;
pub mod ostrowski;
pub mod phase;
pub mod quadratic;
pub mod sudler;
pub mod verify;

pub use accumulate::{CompensatedSum, LogProduct, ProductValue};
pub use error::{Result, SudlerError};
pub use ostrowski::{evaluate, expand, DigitViolation, OstrowskiExpansion};
pub use phase::{sin_pi, Turn};
pub use quadratic::{beta_value, convergents, frac_part, q_closed_form, Convergent, ConvergentTable, QuadraticParams};
pub use sudler::{
    decompose, epsilon_bounds, log_second_derivative, mirror_epsilons, mirror_product, shifted_product,
    sudler_product, sudler_sequence, Decomposition, MirrorDecomposition, ShiftedCache, ShiftedTerm,
    SudlerSequence,
};
