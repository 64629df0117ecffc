mod common;

use common::{any_source, class2_source, distribution, permutation};
use dpleak_core::classify::{cap_cup_oracles, contains_uniform, enumerate_folding_permutations};
use dpleak_core::{classify, find_folding_permutations, Classification};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_is_equivariant(
        (s, t) in (2usize..=5).prop_flat_map(|m| (any_source(m..=m, 3), permutation(m)))
    ) {
        let before = classify(&s).unwrap();
        let after = classify(&s.permute(&t).unwrap()).unwrap();
        prop_assert_eq!(before.tag(), after.tag());
        if let (Classification::ClassII { ordering: a }, Classification::ClassII { ordering: b }) = (&before, &after) {
            prop_assert_eq!(&t.compose(a), b);
        }
    }

    #[test]
    fn class2_excludes_the_uniform_point(s in class2_source(2..=6, 3)) {
        let c = classify(&s).unwrap();
        prop_assert_eq!(c.tag(), "ClassII");
        prop_assert!(!contains_uniform(&s).unwrap());
    }

    #[test]
    fn chamber_search_matches_enumeration(s in any_source(2..=5, 3)) {
        let mut fast = find_folding_permutations(&s).unwrap();
        let mut full = enumerate_folding_permutations(&s).unwrap();
        fast.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
        full.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
        prop_assert_eq!(fast, full);
    }

    #[test]
    fn cap_never_exceeds_cup(
        (s, c) in (3usize..=4).prop_flat_map(|m| (any_source(m..=m, 3), distribution(m)))
    ) {
        let folding = find_folding_permutations(&s).unwrap();
        let oracles = cap_cup_oracles(&s, &folding);
        let cup = oracles.max_over_cup(&c).unwrap().expect("cup contains the folded vertices");
        if let Some(cap) = oracles.max_over_cap(&c).unwrap() {
            prop_assert!(cap.value <= cup.value + 1e-9, "{} > {}", cap.value, cup.value);
        }
    }
}
