//! Fixed-point phases on the circle R/Z and the sine kernel used by every product.
//!
//! A [`Turn`] stores a residue modulo 1 as a `u128` numerator over 2^128. Multiplying
//! by an integer and adding are exact wrapping operations, so `{r beta}` keeps its
//! absolute accuracy of about `r * 2^-128` no matter how large `r` gets.

use std::ops::{Add, AddAssign, Neg, Sub};

const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;
const TWO_POW_M128: f64 = 1.0 / TWO_POW_128;
const TWO_POW_M64: f64 = 1.0 / 18_446_744_073_709_551_616.0;

/// A point of R/Z in 0.128 fixed point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Turn(u128);

impl Turn {
    pub const ZERO: Turn = Turn(0);
    pub const HALF: Turn = Turn(1u128 << 127);

    pub const fn from_bits(bits: u128) -> Self {
        Turn(bits)
    }

    pub const fn bits(self) -> u128 {
        self.0
    }

    /// Reduces `x` modulo 1. Values with `|x| < 2^62` keep full relative accuracy of
    /// the fractional part down to 2^-128.
    pub fn from_f64(x: f64) -> Self {
        if !x.is_finite() {
            return Turn::ZERO;
        }
        let r = x - x.round();
        // r lies in [-1/2, 1/2], so r * 2^128 fits in i128 after the clamp below.
        let scaled = r * TWO_POW_128;
        let v = if scaled >= 2f64.powi(127) {
            i128::MAX
        } else {
            scaled as i128
        };
        Turn(v as u128)
    }

    /// Representative in `[0, 1)`.
    pub fn to_f64(self) -> f64 {
        let v = self.0 as f64 * TWO_POW_M128;
        if v >= 1.0 {
            1.0 - f64::EPSILON / 2.0
        } else {
            v
        }
    }

    /// Representative in `[-1/2, 1/2)`, accurate to the last bit near zero.
    pub fn signed(self) -> f64 {
        // Two hardware 64-bit conversions are much cheaper than one i128 conversion.
        let v = self.0 as i128;
        let hi = (v >> 64) as i64;
        let lo = v as u64;
        hi as f64 * TWO_POW_M64 + lo as f64 * TWO_POW_M128
    }

    /// Distance to the nearest integer, `||x||`.
    pub fn dist(self) -> f64 {
        self.signed().abs()
    }

    pub fn wrapping_mul(self, r: u64) -> Self {
        Turn(self.0.wrapping_mul(r as u128))
    }
}

impl Add for Turn {
    type Output = Turn;
    fn add(self, rhs: Turn) -> Turn {
        Turn(self.0.wrapping_add(rhs.0))
    }
}

impl AddAssign for Turn {
    fn add_assign(&mut self, rhs: Turn) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl Sub for Turn {
    type Output = Turn;
    fn sub(self, rhs: Turn) -> Turn {
        Turn(self.0.wrapping_sub(rhs.0))
    }
}

impl Neg for Turn {
    type Output = Turn;
    fn neg(self) -> Turn {
        Turn(self.0.wrapping_neg())
    }
}

// Taylor coefficients of sin(pi x) / x and cos(pi x) in powers of x^2.
const SIN_C: [f64; 9] = [
    std::f64::consts::PI,
    -5.16771278004997,
    2.5501640398773455,
    -0.5992645293207921,
    0.08214588661112823,
    -0.0073704309457143504,
    0.00046630280576761255,
    -2.1915353447830217e-05,
    7.952054001475513e-07,
];
const COS_C: [f64; 10] = [
    1.0,
    -4.934802200544679,
    4.0587121264167685,
    -1.3352627688545895,
    0.2353306303588932,
    -0.02580689139001406,
    0.0019295743094039231,
    -0.0001046381049248457,
    4.303069587032947e-06,
    -1.3878952462213771e-07,
];

#[inline(always)]
fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * z + ci)
}

/// `sin(pi x)` for `|x| <= 1/2`.
#[inline]
pub fn sin_pi(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 0.25 {
        ax * horner(&SIN_C, ax * ax)
    } else {
        let y = 0.5 - ax;
        horner(&COS_C, y * y)
    };
    v.copysign(x)
}

/// `2 |sin(pi t)|`, the generic factor of every Sudler product.
#[inline]
pub fn two_sin_abs(t: Turn) -> f64 {
    2.0 * sin_pi(t.dist())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_pi_matches_std() {
        let n = 200_000;
        let mut worst = 0.0f64;
        for i in 0..=n {
            let x = -0.5 + i as f64 / n as f64;
            let exact = (std::f64::consts::PI * x).sin();
            let err = (sin_pi(x) - exact).abs() / exact.abs().max(1e-300);
            if exact != 0.0 {
                worst = worst.max(err);
            }
        }
        assert!(worst < 4e-16, "worst relative error {worst}");
    }

    #[test]
    fn sin_pi_tiny_arguments_are_relative_accurate() {
        for e in 9..300 {
            let x = 10f64.powi(-e);
            let rel = (sin_pi(x) / (std::f64::consts::PI * x) - 1.0).abs();
            assert!(rel < 5e-16, "{x} {rel}");
        }
    }

    #[test]
    fn from_f64_round_trips() {
        for &x in &[0.0, 0.25, -0.25, 0.1, 0.999, 1.5e-20, -3.75, 12345.678] {
            let t = Turn::from_f64(x);
            let r = x - x.round();
            assert!((t.signed() - r).abs() <= 1e-16 * r.abs().max(1e-30) + 1e-38, "{x}");
        }
        assert_eq!(Turn::from_f64(0.5).signed(), -0.5);
    }

    #[test]
    fn wrapping_arithmetic_is_modular() {
        let a = Turn::from_f64(0.7);
        let b = Turn::from_f64(0.6);
        assert!(((a + b).to_f64() - 0.3).abs() < 1e-15);
        assert!(((a - b).to_f64() - 0.1).abs() < 1e-15);
        assert!(((-a).to_f64() - 0.3).abs() < 1e-15);
        assert!((a.wrapping_mul(3).to_f64() - 0.1).abs() < 1e-15);
        assert!(Turn::from_bits(u128::MAX).to_f64() < 1.0);
    }
}
