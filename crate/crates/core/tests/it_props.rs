mod common;

use common::class2_source;
use dpleak_core::classify::common_ordering;
use dpleak_core::{blahut_arimoto_rd, it_minmax, make_source_set, mutual_information, solve_class2, Thresholds};
use proptest::prelude::*;

const TOL: f64 = 1e-4;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn zero_region_matches_dp(s in class2_source(2..=4, 2)) {
        let m = s.m();
        let last = Thresholds::of_vertices(&s.gather(&common_ordering(&s).unwrap()).unwrap()).get(m - 1);
        prop_assert!(it_minmax(&s, last, TOL).unwrap().leakage <= TOL);
        if last > 0.06 {
            let below = last - 0.05;
            prop_assert!(it_minmax(&s, below, TOL).unwrap().leakage > 0.0);
            prop_assert!(solve_class2(&s, below).unwrap().leakage.value() > 0.0);
        }
    }

    #[test]
    fn it_below_dp(s in class2_source(2..=4, 2), u in 0.02f64..0.9) {
        let it = it_minmax(&s, u, TOL).unwrap().leakage;
        let dp = solve_class2(&s, u).unwrap().leakage.value();
        prop_assert!(it <= dp + TOL, "{} > {}", it, dp);
    }

    #[test]
    fn convex_in_distortion(s in class2_source(2..=4, 2), c in 0.1f64..0.7) {
        let h = 0.05;
        let f = |d: f64| it_minmax(&s, d, TOL).unwrap().leakage;
        prop_assert!(f(c) <= 0.5 * (f(c - h) + f(c + h)) + 2.0 * TOL);
    }

    #[test]
    fn saddle_is_consistent(s in class2_source(2..=4, 3), u in 0.02f64..0.9) {
        let sol = it_minmax(&s, u, TOL).unwrap();
        let at = mutual_information(&sol.worst_distribution, &sol.mechanism).unwrap();
        prop_assert!((at - sol.leakage).abs() <= sol.saddle_gap + 1e-12);
        prop_assert!(sol.saddle_gap <= TOL);
    }

    #[test]
    fn single_point_is_rate_distortion(p in common::distribution(3), u in 0.02f64..0.9) {
        let s = make_source_set(vec![p.clone()]).unwrap();
        let it = it_minmax(&s, u, TOL).unwrap().leakage;
        let rd = blahut_arimoto_rd(&p, u).unwrap();
        prop_assert!((it - rd).abs() <= TOL, "{} vs {}", it, rd);
    }
}
