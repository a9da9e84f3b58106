//! Summation and product accumulators with controlled rounding error.

use serde::Serialize;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}

/// Factors below this magnitude are treated as exact zeros of the product.
pub const ZERO_FACTOR: f64 = 1e-300;

/// Relative rounding error allowed per factor in reported error bounds.
pub const PER_FACTOR_ERROR: f64 = 1.0 / (1u64 << 50) as f64;

const FLUSH_LO: f64 = 1e-200;
const FLUSH_HI: f64 = 1e200;

/// Multiplies positive factors in f64 runs and moves the running product into a
/// compensated log-sum whenever it leaves `[1e-200, 1e200]`.
#[derive(Clone, Debug)]
pub struct LogProduct {
    logs: CompensatedSum,
    run: f64,
    terms: u64,
    zero: bool,
}

impl Default for LogProduct {
    fn default() -> Self {
        Self::new()
    }
}

impl LogProduct {
    pub fn new() -> Self {
        LogProduct {
            logs: CompensatedSum::new(),
            run: 1.0,
            terms: 0,
            zero: false,
        }
    }

    #[inline]
    pub fn push(&mut self, factor: f64) {
        self.terms += 1;
        if factor < ZERO_FACTOR {
            self.zero = true;
            return;
        }
        self.run *= factor;
        if !(FLUSH_LO..=FLUSH_HI).contains(&self.run) {
            self.logs.add(self.run.ln());
            self.run = 1.0;
        }
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    pub fn finish(mut self) -> ProductValue {
        if self.run != 1.0 {
            self.logs.add(self.run.ln());
        }
        ProductValue {
            n_terms: self.terms,
            log_value: if self.zero {
                f64::NEG_INFINITY
            } else {
                self.logs.value()
            },
            zero: self.zero,
            error_bound: self.terms as f64 * PER_FACTOR_ERROR,
        }
    }
}

/// A product of positive factors carried on the log scale.
///
/// `error_bound` bounds the absolute error of `log_value`, which is the same as a
/// relative error bound on the value itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductValue {
    pub n_terms: u64,
    pub log_value: f64,
    pub zero: bool,
    pub error_bound: f64,
}

impl ProductValue {
    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.log_value.exp()
        }
    }

    /// Combines two disjoint products.
    pub fn times(self, other: ProductValue) -> ProductValue {
        ProductValue {
            n_terms: self.n_terms + other.n_terms,
            log_value: if self.zero || other.zero {
                f64::NEG_INFINITY
            } else {
                self.log_value + other.log_value
            },
            zero: self.zero || other.zero,
            error_bound: self.error_bound + other.error_bound,
        }
    }

    pub fn empty() -> ProductValue {
        ProductValue {
            n_terms: 0,
            log_value: 0.0,
            zero: false,
            error_bound: 0.0,
        }
    }
}
