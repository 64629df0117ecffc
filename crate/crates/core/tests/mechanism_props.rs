mod common;

use common::{distribution, permutation};
use dpleak_core::{construct_optimal_mechanism, eps_dp, Mechanism};
use proptest::prelude::*;

fn positive_mechanism(m: usize) -> impl Strategy<Value = Mechanism> {
    prop::collection::vec(distribution(m), m).prop_map(|rows| Mechanism::new(rows).unwrap())
}

/// `(M, k, dstar)` with `dstar` ascending in `(0, 1]` and summing to at most
/// `M - 1 - k`.
fn staircase_input() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..=8)
        .prop_flat_map(|m| (Just(m), 0..m - 1))
        .prop_flat_map(|(m, k)| (Just(m), Just(k), prop::collection::vec(0.01f64..=1.0, m - k)))
        .prop_map(|(m, k, mut d)| {
            d.sort_by(|a, b| a.total_cmp(b));
            let budget = (m - 1 - k) as f64;
            let total: f64 = d.iter().sum();
            if total > budget {
                d.iter_mut().for_each(|x| *x *= budget / total);
            }
            (m, k, d)
        })
}

proptest! {
    #[test]
    fn eps_is_quasiconvex(
        (a, b, theta) in (2usize..=6).prop_flat_map(|m| (positive_mechanism(m), positive_mechanism(m), 0.01f64..0.99))
    ) {
        let mix = a.mix(&b, theta).unwrap();
        let (ea, eb, em) = (eps_dp(&a).value(), eps_dp(&b).value(), eps_dp(&mix).value());
        prop_assert!(em <= ea.max(eb) + 1e-12);
        // columnwise: the mixture obeys the larger of the two ratio bounds
        let r = ea.max(eb).exp();
        for j in 0..mix.m() {
            let col: Vec<f64> = mix.column(j).collect();
            for &x in &col {
                for &y in &col {
                    prop_assert!(x <= r * y * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn eps_is_relabelling_invariant(
        (q, t) in (2usize..=6).prop_flat_map(|m| (positive_mechanism(m), permutation(m)))
    ) {
        let before = eps_dp(&q).value();
        let after = eps_dp(&t.relabel(&q).unwrap()).value();
        prop_assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn staircase_meets_its_distortions((m, k, dstar) in staircase_input()) {
        let q = construct_optimal_mechanism(&dstar, k, m).unwrap();
        for i in 0..m {
            let total: f64 = q.row(i).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(q.row(i).iter().all(|&x| x >= 0.0));
        }
        let dv = q.distortion_vector();
        for i in 0..m {
            let want = if i < dstar.len() { dstar[i] } else { 1.0 };
            prop_assert!((dv[i] - want).abs() < 1e-12, "symbol {}: {} vs {}", i, dv[i], want);
        }
    }
}
