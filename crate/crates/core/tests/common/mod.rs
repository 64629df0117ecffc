#![allow(dead_code)]

use dpleak_core::{make_source_set, Permutation, SourceSet};
use proptest::prelude::*;

/// Probability vector with every entry at least `floor / m`.
pub fn distribution(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, m).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    })
}

pub fn permutation(m: usize) -> impl Strategy<Value = Permutation> {
    Just((0..m).collect::<Vec<usize>>()).prop_shuffle().prop_map(|v| Permutation::from_map(v).unwrap())
}

/// Vertices with a shared decreasing order, relabelled by a random
/// permutation.
pub fn class2_source(m: std::ops::RangeInclusive<usize>, n: usize) -> impl Strategy<Value = SourceSet> {
    m.prop_flat_map(move |m| (prop::collection::vec(distribution(m), 1..=n), permutation(m)))
        .prop_filter_map("ties or hull meets the uniform point", |(vs, t)| {
            let sorted: Vec<Vec<f64>> = vs
                .into_iter()
                .map(|mut v| {
                    v.sort_by(|a, b| b.total_cmp(a));
                    t.scatter(&v)
                })
                .collect();
            let s = make_source_set(sorted).ok()?;
            let ok = s.vertices().iter().all(|v| {
                let mut p = v.probs().to_vec();
                p.sort_by(|a, b| b.total_cmp(a));
                p.windows(2).all(|w| w[0] - w[1] > 1e-6)
            });
            ok.then_some(s)
        })
}

pub fn any_source(m: std::ops::RangeInclusive<usize>, n: usize) -> impl Strategy<Value = SourceSet> {
    m.prop_flat_map(move |m| prop::collection::vec(distribution(m), 1..=n))
        .prop_filter_map("invalid set", |vs| make_source_set(vs).ok())
}
