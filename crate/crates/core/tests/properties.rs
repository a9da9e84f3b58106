//! Randomised and sweeping properties of the product evaluators.

use proptest::prelude::*;
use sudler::verify::{growth_ratio_check, mirror_ineq3_check, reflection_probe};
use sudler::{decompose, epsilon_bounds, expand, evaluate, sudler_product, QuadraticParams, SudlerSequence};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn expansion_round_trips(b in 1u32..=20, n in 0u64..10_000_000) {
        let e = expand(n, b).unwrap();
        prop_assert!(e.is_valid());
        prop_assert_eq!(evaluate(&e).unwrap(), n);
    }

    #[test]
    fn decomposition_perturbations_stay_in_bounds(b in 1u32..=5, n in 1u64..5_000_000) {
        let p = QuadraticParams::new(b).unwrap();
        let (lo, hi) = epsilon_bounds(&p);
        for t in decompose(&p, n).unwrap().terms {
            prop_assert!(lo <= t.epsilon && t.epsilon <= hi, "eps = {}", t.epsilon);
        }
    }
}

#[test]
fn sweep_matches_direct_products() {
    for b in [1, 2, 5, 6] {
        let p = QuadraticParams::new(b).unwrap();
        for (n, log) in SudlerSequence::range(&p, 1, 3000).unwrap().step_by(97) {
            let direct = sudler_product(&p, n).unwrap().log_value;
            assert!((log - direct).abs() < 1e-10, "b={b} N={n}");
        }
    }
}

#[test]
fn mirror_form_of_the_third_inequality() {
    for (b, n_hi) in [(1, 10), (5, 10)] {
        let p = QuadraticParams::new(b).unwrap();
        let r = mirror_ineq3_check(&p, 1, n_hi).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn golden_growth_ratio() {
    let r = growth_ratio_check(8, 40).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn reflection_probe_reports_both_outcomes() {
    let p = QuadraticParams::new(5).unwrap();
    let probes = reflection_probe(&p, 1..=8).unwrap();
    assert_eq!(probes.len(), 8);
    assert!(probes.iter().all(|r| r.log_ratio_n.is_finite()));
}

#[test]
fn base5_perturbations_outside_the_certified_interval_come_from_the_lowest_block() {
    let p = QuadraticParams::new(5).unwrap();
    let (mut outside, mut lowest) = (0usize, 0.0f64);
    for n in 1..200_000u64 {
        for t in decompose(&p, n).unwrap().terms {
            if !(-0.15..=0.93).contains(&t.epsilon) {
                assert_eq!(t.k, 0, "N = {n}: block q_{} at eps = {}", t.k, t.epsilon);
                outside += 1;
                lowest = lowest.min(t.epsilon);
            }
        }
    }
    assert!(outside > 0);
    assert!((-0.156..-0.155).contains(&lowest), "{lowest}");
}
