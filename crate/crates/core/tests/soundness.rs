//! The envelopes bound the shifted products from below on every grid cell.

use sudler::envelope::{first_block, Envelope, EnvelopeConfig, Which};
use sudler::shifted_product;

/// Checks `P_{q_k}(mid) >= min(f(g_j), f(g_{j+1}))` at the midpoint of every cell of
/// a `points`-point grid, where `f` is `P` for the lowest block and `P*` above it.
/// Cells on which the lowest block vanishes are skipped for that block.
fn check(b: u32, ks: &[usize], points: usize) {
    let env = Envelope::new(EnvelopeConfig::for_base(b).unwrap()).unwrap();
    let (lo, hi) = env.config().interval;
    let grid: Vec<f64> = (0..points).map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64).collect();
    let values: Vec<_> = grid.iter().map(|&e| env.eval(e).unwrap()).collect();
    for w in grid.windows(2) {
        env.check_zero_free(w[0], w[1], Which::PStar).unwrap();
    }
    let lowest_free: Vec<bool> = grid
        .windows(2)
        .map(|w| env.check_zero_free(w[0], w[1], Which::P).is_ok())
        .collect();
    for &k in ks {
        for (j, w) in grid.windows(2).enumerate() {
            let mid = 0.5 * (w[0] + w[1]);
            if k == first_block(b) && !lowest_free[j] {
                continue;
            }
            let bound = if k == first_block(b) {
                values[j].p.min(values[j + 1].p)
            } else {
                values[j].p_star.min(values[j + 1].p_star)
            };
            let v = shifted_product(env.params(), k, mid).unwrap().value();
            assert!(v >= bound, "b={b} k={k} eps={mid}: {v} < {bound}");
        }
    }
}

#[test]
fn golden_ratio_envelope_is_sound() {
    let ks: Vec<usize> = (1..=30).collect();
    check(1, &ks, 41);
}

#[test]
fn base_five_envelope_is_sound() {
    let ks: Vec<usize> = (0..=10).collect();
    check(5, &ks, 9);
}

#[test]
fn base_five_envelope_beyond_exact_blocks() {
    // k = 11 is past K0, so only the limit term of P* covers it.
    check(5, &[11], 2);
}
