use halqp_io::bench::{sgm10, MetricError};
use proptest::prelude::*;

#[test]
fn hand_computed_values() {
    assert_eq!(sgm10(&[0.0], 1000.0, &[true]), Ok(0.0));
    assert_eq!(sgm10(&[90.0, 90.0], 1000.0, &[true, true]), Ok(90.0));
    assert_eq!(sgm10(&[5.0], 1000.0, &[false]), Ok(1000.0));
    // (10 + 10)·(80 + 10) = 1800 under the square root
    let g = sgm10(&[10.0, 80.0], 100.0, &[true, true]).unwrap();
    assert!((g - (1800f64.sqrt() - 10.0)).abs() < 1e-12);
    assert_eq!(sgm10(&[], 1.0, &[]), Err(MetricError::EmptyInput));
}

proptest! {
    #[test]
    fn permutation_invariant(times in prop::collection::vec(0.0f64..500.0, 1..12), rot in 0usize..12) {
        let mask = vec![true; times.len()];
        let mut rotated = times.clone();
        rotated.rotate_left(rot % times.len());
        let (a, b) = (sgm10(&times, 1e3, &mask).unwrap(), sgm10(&rotated, 1e3, &mask).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + 10.0));
        let mut reversed = times.clone();
        reversed.reverse();
        let c = sgm10(&reversed, 1e3, &mask).unwrap();
        prop_assert!((a - c).abs() <= 1e-12 * (a.abs() + 10.0));
    }

    #[test]
    fn monotone_in_each_time(times in prop::collection::vec(0.0f64..500.0, 1..12), idx in 0usize..12, bump in 0.0f64..100.0) {
        let mask = vec![true; times.len()];
        let mut larger = times.clone();
        larger[idx % times.len()] += bump;
        prop_assert!(sgm10(&larger, 1e3, &mask).unwrap() >= sgm10(&times, 1e3, &mask).unwrap() - 1e-12);
    }

    #[test]
    fn failures_are_charged_the_limit(times in prop::collection::vec(0.0f64..500.0, 1..12), idx in 0usize..12) {
        let mut mask = vec![true; times.len()];
        let i = idx % times.len();
        mask[i] = false;
        let mut charged = times.clone();
        charged[i] = 1e3;
        let all = vec![true; times.len()];
        prop_assert_eq!(sgm10(&times, 1e3, &mask).unwrap(), sgm10(&charged, 1e3, &all).unwrap());
    }

    #[test]
    fn between_min_and_max(times in prop::collection::vec(0.0f64..500.0, 1..12)) {
        let mask = vec![true; times.len()];
        let g = sgm10(&times, 1e3, &mask).unwrap();
        let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = times.iter().cloned().fold(0.0, f64::max);
        prop_assert!(g >= lo - 1e-9 && g <= hi + 1e-9);
    }
}
