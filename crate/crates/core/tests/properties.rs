use std::collections::BTreeSet;

use hfold_core::bounds::{classify_regime, main_bound, main_bound_single_sum, HSpec, Regime};
use hfold_core::structure::{ap_witness, ApWitness};
use hfold_core::subseq::{subsequence_sum_set, RepSequence};
use hfold_core::sumset::{capacity, Representation};
use hfold_core::{brute_force_sumset, FoldParams, IntSet, SumsetTable};
use proptest::collection::btree_set;
use proptest::prelude::*;

fn small_set(lo: i64, hi: i64, max_k: usize) -> impl Strategy<Value = IntSet> {
    btree_set(lo..=hi, 1..=max_k).prop_map(|s| IntSet::new(s).unwrap())
}

fn h_spec(hi: u32, max_t: usize) -> impl Strategy<Value = HSpec> {
    btree_set(1..=hi, 1..=max_t).prop_map(|s| HSpec::new(s).unwrap())
}

/// Sums of every multiplicity vector in `[0, r]^k` whose length is at least `alpha`.
fn subsequence_oracle(a: &IntSet, r: u32, alpha: u32) -> Vec<i64> {
    let mut out = BTreeSet::new();
    let k = a.len();
    let mut lam = vec![0u32; k];
    loop {
        let len: u32 = lam.iter().sum();
        if len >= alpha {
            out.insert(
                lam.iter()
                    .zip(a.elements())
                    .map(|(&l, &x)| l as i64 * x)
                    .sum::<i64>(),
            );
        }
        let mut i = 0;
        while i < k && lam[i] == r {
            lam[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
        lam[i] += 1;
    }
    out.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engine_matches_enumeration(a in small_set(-6, 12, 4), r in 1u32..=3) {
        let top = capacity(a.len(), r) as u32;
        let table = SumsetTable::build(&a, r, top).unwrap();
        for h in 0..=top {
            let oracle = brute_force_sumset(&a, FoldParams::new(h, r).unwrap()).unwrap();
            prop_assert_eq!(table.layer(h), oracle);
        }
    }

    #[test]
    fn dense_and_sparse_agree(a in small_set(-20, 40, 5), r in 1u32..=3) {
        let top = capacity(a.len(), r) as u32;
        let dense = SumsetTable::build_with(&a, r, top, Representation::Dense).unwrap();
        let sparse = SumsetTable::build_with(&a, r, top, Representation::Sparse).unwrap();
        prop_assert!(dense.is_dense() && !sparse.is_dense());
        for h in 0..=top {
            prop_assert_eq!(dense.layer(h), sparse.layer(h));
        }
    }

    #[test]
    fn complement_reflects_layers(a in small_set(0, 15, 5), r in 1u32..=3) {
        let top = capacity(a.len(), r) as u32;
        let total: i64 = r as i64 * a.elements().iter().sum::<i64>();
        let table = SumsetTable::build(&a, r, top).unwrap();
        for h in 0..=top {
            let mut mirrored: Vec<i64> = table.layer(top - h).iter().map(|x| total - x).collect();
            mirrored.sort_unstable();
            prop_assert_eq!(table.layer(h), mirrored);
        }
    }

    #[test]
    fn translation_shifts_each_layer(a in small_set(0, 15, 4), r in 1u32..=3, x in -5i64..=5) {
        let top = capacity(a.len(), r) as u32;
        let shifted = IntSet::new(a.elements().iter().map(|y| y + x)).unwrap();
        let t0 = SumsetTable::build(&a, r, top).unwrap();
        let t1 = SumsetTable::build(&shifted, r, top).unwrap();
        for h in 0..=top {
            let want: Vec<i64> = t0.layer(h).iter().map(|s| s + h as i64 * x).collect();
            prop_assert_eq!(t1.layer(h), want);
        }
    }

    #[test]
    fn dilation_scales_layers(a in small_set(-8, 15, 4), r in 1u32..=3, c in 1i64..=4) {
        let top = capacity(a.len(), r) as u32;
        let t0 = SumsetTable::build(&a, r, top).unwrap();
        let t1 = SumsetTable::build(&a.dilate(c).unwrap(), r, top).unwrap();
        for h in 0..=top {
            let want: Vec<i64> = t0.layer(h).iter().map(|s| s * c).collect();
            prop_assert_eq!(t1.layer(h), want);
        }
    }

    #[test]
    fn bound_forms_agree(k in 2usize..=9, hs in h_spec(30, 5), r in 1u32..=6) {
        prop_assume!(r <= hs.max());
        let pivot = main_bound(k, &hs, r).unwrap();
        prop_assert_eq!(pivot.value, main_bound_single_sum(k, &hs, r).unwrap());
        prop_assert_eq!(pivot.value, pivot.terms.iter().map(|t| t.value).sum::<i64>());
    }

    #[test]
    fn classified_bound_is_a_lower_bound(
        (a, r, hs) in (btree_set(1i64..=14, 3..=6), 1u32..=3).prop_flat_map(|(a, r)| {
            let top = a.len() as u32 * r - 1;
            let a = IntSet::new(a).unwrap();
            (Just(a), Just(r), btree_set(1..=top, 2..=3).prop_map(|h| HSpec::new(h).unwrap()))
        })
    ) {
        let rep = classify_regime(a.len(), r, &hs, false).unwrap();
        prop_assume!(rep.hypotheses_ok());
        let size = SumsetTable::build(&a, r, hs.max()).unwrap().union_len(hs.as_slice());
        prop_assert!(size as i64 >= rep.value(), "{} < {} ({})", size, rep.value(), rep.regime);
    }

    #[test]
    fn main_regime_is_chosen_below_threshold(k in 3usize..=8, hs in h_spec(20, 4), r in 1u32..=4) {
        prop_assume!(hs.len() >= 2 && r <= hs.max());
        prop_assume!((hs.max() as i64) < (k as i64 - 1) * r as i64);
        let rep = classify_regime(k, r, &hs, false).unwrap();
        prop_assert_eq!(rep.regime, Regime::MainTheorem);
        prop_assert_eq!(rep.value(), main_bound(k, &hs, r).unwrap().value);
    }

    #[test]
    fn subsequence_sums_match_enumeration(a in small_set(0, 8, 4), r in 1u32..=3, alpha in 1u32..=12) {
        let top = capacity(a.len(), r) as u32;
        prop_assume!(alpha <= top);
        let seq = RepSequence::new(a.clone(), r).unwrap();
        let got = subsequence_sum_set(&seq, alpha).unwrap();
        let want = subsequence_oracle(&a, r, alpha);
        prop_assert_eq!(got.elements(), want.as_slice());
    }

    #[test]
    fn subsequence_sums_shrink_with_alpha(a in small_set(0, 10, 5), r in 1u32..=3, alpha in 1u32..=14) {
        let top = capacity(a.len(), r) as u32;
        prop_assume!(alpha < top);
        let seq = RepSequence::new(a, r).unwrap();
        let wide = subsequence_sum_set(&seq, alpha).unwrap();
        let narrow = subsequence_sum_set(&seq, alpha + 1).unwrap();
        prop_assert!(narrow.elements().iter().all(|x| wide.contains(*x)));
    }

    #[test]
    fn progressions_are_recognized(first in -20i64..=20, diff in 1i64..=7, k in 2usize..=9) {
        let a = IntSet::new((0..k as i64).map(|i| first + i * diff)).unwrap();
        prop_assert_eq!(ap_witness(&a), ApWitness::Progression { first, diff });
    }

    #[test]
    fn ap_status_survives_dilation(a in small_set(-10, 20, 6), c in 1i64..=5) {
        prop_assert_eq!(ap_witness(&a).is_ap(), ap_witness(&a.dilate(c).unwrap()).is_ap());
    }

    #[test]
    fn sets_round_trip_through_json(a in small_set(-50, 50, 8), hs in h_spec(40, 6)) {
        let a2: IntSet = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        let h2: HSpec = serde_json::from_str(&serde_json::to_string(&hs).unwrap()).unwrap();
        prop_assert_eq!(a, a2);
        prop_assert_eq!(hs, h2);
    }
}

#[test]
fn unsorted_json_is_normalized_and_duplicates_rejected() {
    let a: IntSet = serde_json::from_str("[5, 1, 3]").unwrap();
    assert_eq!(a.elements(), &[1, 3, 5]);
    assert!(serde_json::from_str::<IntSet>("[]").is_err());
    assert!(serde_json::from_str::<HSpec>("[0, 2]").is_err());
}
