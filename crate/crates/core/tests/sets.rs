use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use sumfree::{AmbientGroup, GroupSet, Level, Rational};

fn naive_restricted(s: &[i64]) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    for (i, &a) in s.iter().enumerate() {
        for &b in &s[i + 1..] {
            out.insert(a + b);
        }
    }
    out
}

#[test]
fn restricted_sumset_lower_bound_exhaustive() {
    for mask in 0u32..(1 << 12) {
        let s: Vec<i64> = (0..12).filter(|i| mask >> i & 1 == 1).map(|i| i as i64 + 1).collect();
        if s.len() < 2 {
            continue;
        }
        let got = GroupSet::from_ints(s.iter().copied()).restricted_sumset().unwrap();
        let want = naive_restricted(&s);
        assert_eq!(got.codes(), want.iter().copied().collect::<Vec<_>>());
        assert!(got.len() + 3 >= 2 * s.len(), "{s:?}");
    }
}

#[test]
fn restricted_sumset_lower_bound_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..40);
        let s = GroupSet::from_ints((0..n).map(|_| rng.gen_range(-1000..1000)));
        if s.len() < 2 {
            continue;
        }
        assert!(s.restricted_sumset().unwrap().len() + 3 >= 2 * s.len());
    }
}

#[test]
fn concrete_examples() {
    let s = GroupSet::from_ints([0, 1, 2, 4]);
    assert_eq!(s.restricted_sumset().unwrap(), GroupSet::from_ints(1..=6));
    assert!(GroupSet::from_ints([5]).restricted_sumset().unwrap().is_empty());
    let a = GroupSet::from_ints([1, 2]);
    assert_eq!(a.sumset(&a).unwrap(), GroupSet::from_ints([2, 3, 4]));
    let z3 = AmbientGroup::cyclic(3).unwrap();
    let m = GroupSet::new(z3.clone(), [1, 2]).unwrap();
    assert_eq!(m.dilate(2).unwrap(), m);
    assert!(!GroupSet::from_ints([-1, 1]).is_sumfree_wrt(&GroupSet::from_ints([-1, 0, 1])).unwrap());
    assert!(GroupSet::from_ints([3, 4, 5]).is_sumfree_wrt(&GroupSet::from_ints(1..=5)).unwrap());
    let (idx, heavy) = GroupSet::from_ints([1, 3, 5, 2]).heavy_levels(Rational::new(1, 2)).unwrap();
    assert_eq!(idx.into_iter().collect::<Vec<_>>(), vec![Level::Finite(0)]);
    assert_eq!(heavy, GroupSet::from_ints([1, 3, 5]));
    let (idx, _) = GroupSet::from_ints([2, 4]).heavy_levels(Rational::new(1, 4)).unwrap();
    assert_eq!(idx.len(), 2);
    assert!(GroupSet::new(z3, [0]).unwrap().two_adic_decompose().is_err());
    let dec = GroupSet::from_ints([0, 1, 2, 3, 4, 6, 8]).two_adic_decompose().unwrap();
    assert_eq!(dec.level(Level::Finite(1)), Some(&GroupSet::from_ints([2, 6])));
    assert_eq!(dec.level(Level::Infinite), Some(&GroupSet::from_ints([0])));
}

fn small_set() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-500i64..500, 0..25)
}

proptest! {
    #[test]
    fn decomposition_partitions(v in prop::collection::vec(-10_000i64..10_000, 1..60)) {
        let a = GroupSet::from_ints(v);
        let dec = a.two_adic_decompose().unwrap();
        let mut seen = Vec::new();
        for (level, part) in &dec.levels {
            for z in part.iter() {
                match level {
                    Level::Finite(i) => {
                        prop_assert!(z != 0);
                        prop_assert_eq!(z % (1i64 << i), 0);
                        prop_assert!(z % (1i64 << (i + 1)) != 0);
                    }
                    Level::Infinite => prop_assert_eq!(z, 0),
                }
                seen.push(z);
            }
        }
        seen.sort_unstable();
        prop_assert_eq!(seen.as_slice(), a.codes());
    }

    #[test]
    fn heavy_level_count_below_inverse_eps(v in prop::collection::vec(-4096i64..4096, 1..80), num in 1i64..20, den in 1i64..20) {
        prop_assume!(num <= den);
        let eps = Rational::new(num, den);
        let a = GroupSet::from_ints(v);
        let (idx, heavy) = a.heavy_levels(eps).unwrap();
        let ceil_inv = eps.recip().ceil().to_integer() as usize;
        prop_assert!(idx.len() < ceil_inv || (ceil_inv == 1 && idx.is_empty()));
        prop_assert!(Rational::from_integer(idx.len() as i64) * eps < Rational::from_integer(1));
        prop_assert!(heavy.is_subset(&a));
    }

    #[test]
    fn sumset_laws(a in small_set(), b in small_set(), c in small_set()) {
        let (a, b, c) = (GroupSet::from_ints(a), GroupSet::from_ints(b), GroupSet::from_ints(c));
        prop_assert_eq!(a.sumset(&b).unwrap(), b.sumset(&a).unwrap());
        prop_assert_eq!(a.sumset(&b).unwrap().sumset(&c).unwrap(), a.sumset(&b.sumset(&c).unwrap()).unwrap());
    }

    #[test]
    fn modular_sumset_laws(a in prop::collection::vec(0i64..36, 0..12), b in prop::collection::vec(0i64..36, 0..12), c in prop::collection::vec(0i64..36, 0..12)) {
        let g = AmbientGroup::finite(vec![4, 9]).unwrap();
        let mk = |v: Vec<i64>| GroupSet::new(g.clone(), v).unwrap();
        let (a, b, c) = (mk(a), mk(b), mk(c));
        prop_assert_eq!(a.sumset(&b).unwrap(), b.sumset(&a).unwrap());
        prop_assert_eq!(a.sumset(&b).unwrap().sumset(&c).unwrap(), a.sumset(&b.sumset(&c).unwrap()).unwrap());
    }

    #[test]
    fn dilate_composes(v in small_set()) {
        let a = GroupSet::from_ints(v);
        prop_assert_eq!(a.dilate(2).unwrap().dilate(2).unwrap(), a.dilate(4).unwrap());
        prop_assert_eq!(a.dilate(3).unwrap().len(), a.len());
        prop_assert_eq!(a.dilate(1).unwrap(), a);
    }

    #[test]
    fn sumfree_matches_definition(s in prop::collection::vec(-30i64..30, 0..8), x in prop::collection::vec(-60i64..60, 0..30)) {
        let sset = GroupSet::from_ints(s);
        let xset = GroupSet::from_ints(x);
        let sums = naive_restricted(sset.codes());
        prop_assert_eq!(sset.is_sumfree_wrt(&xset).unwrap(), sums.iter().all(|z| !xset.contains(*z)));
    }
}
