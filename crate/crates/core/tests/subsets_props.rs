use madc::subsets::{binomial, enumerate_subsets, rank_subset, unrank_subset, KSubset};
use proptest::prelude::*;

#[test]
fn rank_unrank_bijection_up_to_12() {
    for n in 1..=12 {
        for k in 1..=n {
            let all = enumerate_subsets(n, k).unwrap();
            assert_eq!(all.len() as u64, binomial(n, k).unwrap());
            for (i, s) in all.iter().enumerate() {
                let r = i as u64 + 1;
                assert_eq!(rank_subset(n, s).unwrap(), r);
                assert_eq!(&unrank_subset(n, k, r).unwrap(), s);
            }
            assert!(all.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

fn subset_of(n: usize) -> impl Strategy<Value = KSubset> {
    proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), 1..=n)
        .prop_map(|v| KSubset::from_sorted(v).unwrap())
}

proptest! {
    #[test]
    fn rank_order_matches_lexicographic_order(
        (n, a, b) in (2usize..=20).prop_flat_map(|n| (Just(n), 1..=n))
            .prop_flat_map(|(n, k)| {
                let pick = proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), k);
                (Just(n), pick.clone(), pick)
            })
    ) {
        let a = KSubset::from_sorted(a).unwrap();
        let b = KSubset::from_sorted(b).unwrap();
        let (ra, rb) = (rank_subset(n, &a).unwrap(), rank_subset(n, &b).unwrap());
        prop_assert_eq!(a.cmp(&b), ra.cmp(&rb));
    }

    #[test]
    fn unrank_inverts_rank_for_large_ground_sets(s in subset_of(40)) {
        let r = rank_subset(40, &s).unwrap();
        prop_assert!(r >= 1 && r <= binomial(40, s.len()).unwrap());
        prop_assert_eq!(unrank_subset(40, s.len(), r).unwrap(), s);
    }

    #[test]
    fn canonicalization(mut v in proptest::collection::vec(1usize..50, 1..10)) {
        v.sort_unstable();
        v.dedup();
        let mut shuffled = v.clone();
        shuffled.reverse();
        let canon = KSubset::new(shuffled).unwrap();
        prop_assert_eq!(canon.elements(), &v[..]);
    }
}
