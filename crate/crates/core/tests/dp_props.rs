mod common;

use common::{any_source, class2_source};
use dpleak_core::classify::common_ordering;
use dpleak_core::{
    bisection_cross_check, classify, construct_optimal_mechanism, eps_dp, is_valid, solve_class2, solve_class3_bounds,
    solve_lfp_k, Classification, SourceSet, Thresholds,
};
use proptest::prelude::*;

fn sorted(s: &SourceSet) -> SourceSet {
    s.gather(&common_ordering(s).unwrap()).unwrap()
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| i as f64 / n as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leakage_is_nonincreasing(s in class2_source(2..=6, 3)) {
        let mut prev = f64::INFINITY;
        for d in grid(50) {
            let v = solve_class2(&s, d).unwrap().leakage.value();
            prop_assert!(v <= prev + 1e-9, "D={}: {} > {}", d, v, prev);
            prev = v;
        }
    }

    #[test]
    fn zero_exactly_from_the_last_threshold(s in class2_source(2..=6, 3)) {
        let m = s.m();
        let last = Thresholds::of_vertices(&sorted(&s)).get(m - 1);
        prop_assert_eq!(solve_class2(&s, last).unwrap().leakage.value(), 0.0);
        prop_assert_eq!(solve_class2(&s, (last + 0.05).min(1.0)).unwrap().leakage.value(), 0.0);
        if last > 2e-3 {
            prop_assert!(solve_class2(&s, last - 1e-3).unwrap().leakage.value() > 0.0);
        }
    }

    #[test]
    fn constructed_mechanism_achieves_the_value(s in class2_source(2..=6, 3), u in 0.01f64..0.99) {
        let sol = solve_class2(&s, u).unwrap();
        if let Some(q) = &sol.mechanism {
            prop_assert!(is_valid(q, &s, u).unwrap().valid);
            let got = eps_dp(q).value();
            let want = sol.leakage.value();
            prop_assert!(got == want || (got - want).abs() < 1e-7, "{} vs {}", got, want);
        }
        if let (Some(dstar), Some(k)) = (&sol.dstar, sol.chosen_k) {
            let q = construct_optimal_mechanism(dstar, k, s.m()).unwrap();
            prop_assert!((eps_dp(&q).value() - sol.leakage.value()).abs() < 1e-7);
        }
    }

    #[test]
    fn no_suppression_below_the_first_threshold(s in class2_source(2..=6, 3), u in 0.01f64..0.99) {
        let sorted = sorted(&s);
        let d = u * Thresholds::of_vertices(&sorted).get(1);
        let m = s.m() as f64;
        let (v, _) = solve_lfp_k(&sorted, d, 0, &[]).unwrap();
        let want = ((m - 1.0) * (1.0 - d) / d).ln();
        prop_assert!((v.value() - want).abs() < 1e-7, "{} vs {}", v.value(), want);
    }

    #[test]
    fn charnes_cooper_matches_bisection(s in class2_source(2..=6, 3), k_raw in 0usize..5, u in 0.05f64..1.0) {
        let m = s.m();
        let k = k_raw % (m - 1);
        let sorted = sorted(&s);
        let dk = Thresholds::of_vertices(&sorted).get(k);
        let d = dk + u * (1.0 - dk);
        let (cc, _) = solve_lfp_k(&sorted, d, k, &[]).unwrap();
        let bis = bisection_cross_check(&s, d, k).unwrap();
        prop_assert!(
            cc.value() == bis.value() || (cc.value() - bis.value()).abs() < 1e-6,
            "k={} D={}: {} vs {}", k, d, cc.value(), bis.value()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn class3_bounds_are_ordered_and_monotone(s in any_source(3..=4, 2)) {
        prop_assume!(matches!(classify(&s).unwrap(), Classification::ClassIII { .. }));
        let (mut prev_lo, mut prev_up) = (f64::INFINITY, f64::INFINITY);
        for d in grid(20) {
            let (lo, up) = solve_class3_bounds(&s, d).unwrap();
            let (lo, up) = (lo.leakage.value(), up.leakage.value());
            prop_assert!(lo <= up + 1e-7, "D={}: {} > {}", d, lo, up);
            prop_assert!(lo <= prev_lo + 1e-7 && up <= prev_up + 1e-7);
            prev_lo = lo;
            prev_up = up;
        }
    }
}
