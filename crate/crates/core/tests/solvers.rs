use proptest::prelude::*;
use sumfree::solvers::{
    bootstrap_construct, exact_oracle, greedy_oracle, greedy_sumfree, is_summing, max_sumfree_subset, summing_witness,
    BootstrapParams, Budget, ConflictGraph, GreedyOrder, SolveOptions,
};
use sumfree::GroupSet;

/// Largest admissible subset by scanning every subset mask.
fn brute_force(a: &[i64], x: &GroupSet) -> usize {
    let n = a.len();
    let mut conflict = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && x.contains(a[i] + a[j]) {
                conflict[i] |= 1 << j;
            }
        }
    }
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        if (0..n).all(|i| mask >> i & 1 == 0 || conflict[i] & mask == 0) {
            best = size;
        }
    }
    best
}

fn exact(a: &GroupSet, x: &GroupSet) -> usize {
    let r = max_sumfree_subset(a, x, &SolveOptions::default()).unwrap();
    assert!(r.optimal);
    assert!(r.witness.is_sumfree_wrt(x).unwrap());
    assert!(r.witness.is_subset(a));
    assert_eq!(r.size, r.witness.len());
    r.size
}

#[test]
fn concrete_values() {
    let t = GroupSet::from_ints([-1, 0, 1]);
    assert_eq!(exact(&t, &t), 1);
    assert!(is_summing(&t, &t, 2).unwrap());
    let i5 = GroupSet::from_ints(1..=5);
    assert_eq!(exact(&i5, &i5), 3);
    assert!(!is_summing(&i5, &i5, 3).unwrap());
    assert_eq!(exact(&GroupSet::from_ints([7]), &GroupSet::from_ints([7])), 1);
    let empty = GroupSet::from_ints([]);
    assert_eq!(exact(&empty, &i5), 0);
    assert!(is_summing(&GroupSet::from_ints([1]), &i5, 2).unwrap());
    assert!(is_summing(&i5, &i5, 1).is_err());

    let g = ConflictGraph::new(&i5, &i5).unwrap();
    assert_eq!(g.edges(), vec![(1, 2), (1, 3), (1, 4), (2, 3)]);
    assert_eq!(ConflictGraph::new(&t, &t).unwrap().edge_count(), 3);
    let p = GroupSet::from_ints((0..12).map(|i| 1i64 << i));
    assert_eq!(ConflictGraph::new(&p, &p).unwrap().edge_count(), 0);
}

#[test]
fn ruzsa_bound_on_positive_sets() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut cases: Vec<GroupSet> = (2..=40).map(|n| GroupSet::from_ints(1..=n)).collect();
    cases.extend((1..=14).map(|n| GroupSet::from_ints((0..n).map(|i| 1i64 << i))));
    for _ in 0..300 {
        let n = rng.gen_range(2..30);
        cases.push(GroupSet::from_ints((0..n).map(|_| rng.gen_range(1..80))));
    }
    for a in cases.into_iter().filter(|a| a.len() >= 2) {
        let m = exact(&a, &a) as f64;
        assert!(m > 2.0 * (a.len() as f64).log(3.0) - 1.0, "{a}");
    }
}

#[test]
fn log_bound_fails_for_sets_straddling_zero() {
    let a = GroupSet::from_ints(-3..=3);
    assert_eq!(exact(&a, &a), 2);
    assert!(2.0 < 2.0 * 7f64.log(3.0) - 1.0);
}

#[test]
fn greedy_on_examples() {
    let i5 = GroupSet::from_ints(1..=5);
    assert_eq!(greedy_sumfree(&i5, &i5, GreedyOrder::DecreasingAbs).unwrap(), GroupSet::from_ints([3, 4, 5]));
    let t = GroupSet::from_ints([-1, 0, 1]);
    assert_eq!(greedy_sumfree(&t, &t, GreedyOrder::Increasing).unwrap().len(), 1);
}

#[test]
fn bootstrap_with_exact_oracle() {
    let a = GroupSet::from_ints(1..=400);
    let params = BootstrapParams { k: 2, l: 1, d: 2, m: 2 };
    let out = bootstrap_construct(&a, params, &mut exact_oracle).unwrap();
    let completed = out.rounds.iter().filter(|r| r.chosen.is_some()).count();
    assert_eq!(out.set.len(), params.k * completed);
    assert!(out.verified_sumfree);
    assert!(out.set.is_sumfree_wrt(&a).unwrap());
    let mut seen = std::collections::BTreeSet::new();
    for r in &out.rounds {
        for &c in r.chosen.iter().flatten() {
            assert!(seen.insert(c), "rounds overlap at {c}");
        }
    }

    let one = bootstrap_construct(&a, BootstrapParams { k: 2, l: 1, d: 2, m: 0 }, &mut exact_oracle).unwrap();
    assert_eq!(one.rounds.len(), 1);
    assert_eq!(one.set.len(), 2);

    let failing = bootstrap_construct(&a, params, &mut |_: &GroupSet, _: &GroupSet, _: usize| None).unwrap();
    assert!(failing.set.is_empty());
    assert_eq!(failing.failed_round, Some(0));

    // The example instance [1, 200] is too small for these parameters.
    assert!(bootstrap_construct(&GroupSet::from_ints(1..=200), params, &mut exact_oracle).is_err());
    assert!(bootstrap_construct(&GroupSet::from_ints(0..=400), params, &mut exact_oracle).is_err());
}

#[test]
fn bootstrap_with_greedy_oracle_is_sumfree_when_complete() {
    let a = GroupSet::from_ints((1..=600).filter(|z| z % 3 != 0));
    let out = bootstrap_construct(&a, BootstrapParams { k: 3, l: 1, d: 3, m: 1 }, &mut greedy_oracle).unwrap();
    if out.failed_round.is_none() {
        assert!(out.verified_sumfree);
    }
    assert_eq!(out.verified_sumfree, out.set.is_sumfree_wrt(&a).unwrap());
}

#[test]
fn parallel_and_budgeted_runs() {
    let a = GroupSet::from_ints((1..=60).filter(|z| z % 7 != 3));
    let base = max_sumfree_subset(&a, &a, &SolveOptions::default()).unwrap();
    for threads in [2, 4] {
        let opts = SolveOptions { threads, ..SolveOptions::default() };
        let r = max_sumfree_subset(&a, &a, &opts).unwrap();
        assert_eq!(r.witness, base.witness);
    }
    let cut = max_sumfree_subset(&a, &a, &SolveOptions { budget: Budget::nodes(3), ..SolveOptions::default() }).unwrap();
    assert!(cut.witness.is_sumfree_wrt(&a).unwrap());
    assert!(cut.size <= base.size);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_matches_brute_force(v in prop::collection::btree_set(-30i64..=30, 0..=18)) {
        let a = GroupSet::from_ints(v.iter().copied());
        prop_assert_eq!(exact(&a, &a), brute_force(a.codes(), &a));
    }

    #[test]
    fn exact_matches_brute_force_general_x(v in prop::collection::btree_set(-30i64..=30, 0..=14), x in prop::collection::vec(-60i64..=60, 0..40)) {
        let a = GroupSet::from_ints(v.iter().copied());
        let x = GroupSet::from_ints(x);
        let m = exact(&a, &x);
        prop_assert_eq!(m, brute_force(a.codes(), &x));
        for k in 2..=4 {
            prop_assert_eq!(is_summing(&a, &x, k).unwrap(), m < k);
            let w = summing_witness(&a, &x, k).unwrap();
            prop_assert_eq!(w.is_some(), m >= k);
            if let Some(w) = w {
                prop_assert_eq!(w.len(), k);
                prop_assert!(w.is_sumfree_wrt(&x).unwrap() && w.is_subset(&a));
            }
        }
    }

    #[test]
    fn greedy_is_maximal_and_dominated(v in prop::collection::btree_set(-40i64..=40, 1..=20), seed in any::<u64>()) {
        let a = GroupSet::from_ints(v.iter().copied());
        let m = exact(&a, &a);
        for order in [GreedyOrder::DecreasingAbs, GreedyOrder::Increasing, GreedyOrder::SeededRandom(seed)] {
            let s = greedy_sumfree(&a, &a, order).unwrap();
            prop_assert!(s.is_sumfree_wrt(&a).unwrap());
            prop_assert!(s.len() <= m);
            for c in a.iter().filter(|c| !s.contains(*c)) {
                let bigger = s.union(&GroupSet::from_ints([c])).unwrap();
                prop_assert!(!bigger.is_sumfree_wrt(&a).unwrap());
            }
            prop_assert_eq!(&s, &greedy_sumfree(&a, &a, order).unwrap());
        }
    }

    #[test]
    fn solver_is_deterministic(v in prop::collection::btree_set(-50i64..=50, 0..=30)) {
        let a = GroupSet::from_ints(v.iter().copied());
        let one = max_sumfree_subset(&a, &a, &SolveOptions::default()).unwrap();
        let two = max_sumfree_subset(&a, &a, &SolveOptions::default()).unwrap();
        prop_assert_eq!(&one.witness, &two.witness);
        prop_assert_eq!(one.nodes_explored, two.nodes_explored);
        prop_assert!(one.witness.is_sumfree_wrt(&a).unwrap());
    }
}
