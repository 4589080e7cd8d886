use num::{BigInt, BigRational, Signed, Zero};
use proptest::prelude::*;
use rand::Rng;
use sumfree::fpmodel::*;
use sumfree::report::Verdict;
use sumfree::systems::ClosedPairWitness;
use sumfree::{AmbientGroup, GroupSet, Rational};

fn random_set(v: &FieldSpace, density: f64, seed: u64) -> GroupSet {
    let mut rng = sumfree::constructions::rng(seed);
    GroupSet::new(v.ambient(), (0..v.order() as i64).filter(|_| rng.gen_bool(density))).unwrap()
}

fn whole(v: &FieldSpace) -> WeightedCover {
    WeightedCover::coset(v.clone(), 0, Subspace::full(v)).unwrap()
}

/// Brute force: the mean over all (z_1, ..., z_k) in (x+U)^k, independent of
/// the bitset counter.
fn naive_q(v: &FieldSpace, x: i64, u: &Subspace, a: &GroupSet, forb: &GroupSet, k: usize) -> BigRational {
    let g = v.ambient();
    let coset = u.coset_codes(&v.vec_of(x)).unwrap();
    let n = coset.len();
    let mut hits = 0u64;
    let mut idx = vec![0usize; k];
    loop {
        let z: Vec<i64> = idx.iter().map(|&i| coset[i]).collect();
        let good = z.iter().all(|&c| a.contains(c))
            && (0..k).all(|i| (i + 1..k).all(|j| !forb.contains(g.add(z[i], z[j]).unwrap())));
        hits += u64::from(good);
        let mut p = k;
        loop {
            if p == 0 {
                return BigRational::new(BigInt::from(hits), BigInt::from(n).pow(k as u32));
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < n {
                break;
            }
            idx[p] = 0;
        }
    }
}

#[test]
fn dilated_subspace_cover_covers_the_dilate() {
    let v = FieldSpace::new(5, 2).unwrap();
    let u = Subspace::span(&v, &[vec![1, 3]]).unwrap();
    let reps = [v.code_of(&[0, 1]), v.code_of(&[2, 2])];
    let c = WeightedCover::uniform_cosets(v.clone(), &reps, &u).unwrap();
    let mut s = Vec::new();
    for &r in &reps {
        s.extend(u.coset_codes(&v.vec_of(r)).unwrap());
    }
    let s = GroupSet::new(v.ambient(), s).unwrap();
    assert!(cover_check(&c, &s));
    let two = cover_dilate(&c, 1).unwrap();
    assert!(cover_check(&two, &s.dilate(2).unwrap()));
    assert!(!cover_check(&two, &s));
}

#[test]
fn characteristic_two_cannot_dilate() {
    let v = FieldSpace::new(2, 3).unwrap();
    assert!(cover_dilate(&whole(&v), 1).is_err());
}

#[test]
fn deviation_matches_fourth_moment() {
    // || 1_A' * 1_A' - m(A')^2 ||^2 = sum_{gamma != 0} |1_A'^(gamma)|^4 under the
    // probability normalisation; the right side is computed by FFT.
    for seed in 0..6 {
        let v = FieldSpace::new(3, 4).unwrap();
        let a = random_set(&v, 0.4, seed);
        let exact = atom_uniformity(&v, &Subspace::full(&v), 0, &a).unwrap();
        let f = sumfree::fourier::DenseFunction::indicator(&a).unwrap().dft();
        let n = v.order() as f64;
        let fourth: f64 = f.values().iter().skip(1).map(|c| (c.norm() / n).powi(4)).sum();
        let lhs = num::ToPrimitive::to_f64(&exact.deviation_sq).unwrap();
        assert!((lhs - fourth).abs() < 1e-9, "{lhs} vs {fourth}");
    }
}

#[test]
fn uniformize_random_f3_instance() {
    let v = FieldSpace::new(3, 5).unwrap();
    let a = random_set(&v, 0.5, 11);
    let s = GroupSet::full(v.ambient()).unwrap();
    let delta = Rational::new(3, 10);
    let (out, trace) = uniformize(&whole(&v), &a, &s, delta, 2).unwrap();
    assert!(trace.all_checks_hold());
    assert!(trace.steps.len() as u64 <= trace.step_cap);
    assert_eq!(trace.step_cap, 223);
    assert!(cover_check(&out, &s));
    let budget: usize = trace.steps.iter().map(|st| st.max_codim_drop).sum();
    assert!(trace.min_dim_final + budget >= trace.min_dim_initial);
}

#[test]
fn exact_count_matches_enumeration() {
    let v = FieldSpace::new(3, 2).unwrap();
    let u = Subspace::span(&v, &[vec![1, 1]]).unwrap();
    for seed in 0..20 {
        let a = random_set(&v, 0.6, seed);
        let forb = random_set(&v, 0.3, seed + 100);
        for k in 1..=3 {
            for x in [0, 4, 7] {
                let got = count_tuples(&v, x, &u, &a, &forb, k, CountMode::Exact).unwrap().exact.unwrap();
                assert_eq!(got, naive_q(&v, x, &u, &a, &forb, k));
            }
        }
    }
}

#[test]
fn counting_lemma_corpora_have_no_counterexample() {
    // Every A, X in F_3^1 and F_5^1 and a sample over F_3^2, k in {2, 3}.
    for (p, n) in [(3u64, 1usize), (5, 1)] {
        let v = FieldSpace::new(p, n).unwrap();
        let full = Subspace::full(&v);
        let q = v.order() as i64;
        for am in 0..(1u32 << q) {
            for xm in 0..(1u32 << q) {
                let a = GroupSet::new(v.ambient(), (0..q).filter(|i| am >> i & 1 == 1)).unwrap();
                let x = GroupSet::new(v.ambient(), (0..q).filter(|i| xm >> i & 1 == 1)).unwrap();
                for k in [2, 3] {
                    for eps in [Rational::new(1, 10), Rational::new(1, 5), Rational::new(1, 2)] {
                        for z in 0..q {
                            let r = ct_bound_check(&v, z, &full, &a, &x, k, eps).unwrap();
                            assert_ne!(r.verdict, Verdict::Counterexample, "{r:?}");
                        }
                    }
                }
            }
        }
    }
}

fn chain(g: &AmbientGroup, steps: &[i64]) -> Vec<ClosedPairWitness> {
    let n = g.order().unwrap() as i64;
    let sets: Vec<GroupSet> = steps.iter().map(|&s| GroupSet::new(g.clone(), (0..n).step_by(s as usize)).unwrap()).collect();
    sets.windows(2)
        .map(|w| ClosedPairWitness::new(w[0].clone(), w[1].clone(), w[0].clone(), w[0].clone(), Rational::zero()).unwrap())
        .collect()
}

#[test]
fn lemma_c_small_cyclic_instances() {
    let g = AmbientGroup::cyclic(45).unwrap();
    let pairs = chain(&g, &[1, 3, 15]);
    let zs: Vec<&GroupSet> = pairs.iter().map(|p| &p.z).chain([&pairs[1].w]).collect();
    let mut rng = sumfree::constructions::rng(45);
    let mut held = 0;
    for t in 0..100 {
        let keep = 0.5 + 0.5 * (t as f64 / 100.0);
        let a = GroupSet::new(g.clone(), (0..45).filter(|_| rng.gen_bool(keep))).unwrap();
        let x = GroupSet::new(g.clone(), (0..45).filter(|_| rng.gen_bool(0.03))).unwrap();
        let z0 = rng.gen_range(0..45);
        let shifted = a.translate(g.neg(z0).unwrap()).unwrap();
        let xs = x.translate(g.neg(2 * z0 % 45).unwrap()).unwrap();
        let density = |s: &GroupSet, z: &GroupSet| Rational::new(s.intersection_len(z) as i64, z.len() as i64);
        let alpha = density(&shifted, zs[0]);
        let tau = zs.iter().map(|z| (density(&shifted, z) - alpha).abs()).max().unwrap();
        let eps = zs[..2].iter().map(|z| density(&xs, z)).max().unwrap();
        // Smallest delta on a grid that satisfies the uniformity hypothesis.
        let report = [1, 10, 100, 1000, 10000].iter().rev().find_map(|&den| {
            let input = LemmaCInput { a: &a, forbidden: &x, z0, pairs: &pairs, alpha, tau, eps, delta: Rational::new(1, den), k: 3 };
            let r = lemma_c_check(&input).unwrap();
            (r.verdict != Verdict::HypothesisViolated).then_some(r)
        });
        let r = report.expect("delta = 1 always satisfies the uniformity hypothesis");
        assert_ne!(r.verdict, Verdict::Counterexample, "{r:?}");
        held += usize::from(r.verdict == Verdict::Holds);
    }
    assert!(held > 0);
}

#[test]
fn pipeline_on_random_instance_rechecks() {
    let v = FieldSpace::new(3, 5).unwrap();
    let a = random_set(&v, 0.25, 5);
    let opts = PipelineOptions { stop_on_witness: false, ..PipelineOptions::default() };
    let rep = model_pipeline(&a, &a, 3, 2, Rational::new(3, 10), &opts).unwrap();
    assert!(rep.rechecks_ok, "{}", serde_json::to_string(&rep).unwrap());
    assert_eq!(rep.dilates.len(), 2);
    let again = model_pipeline(&a, &a, 3, 2, Rational::new(3, 10), &opts).unwrap();
    assert_eq!(serde_json::to_string(&rep).unwrap(), serde_json::to_string(&again).unwrap());
    let stop = model_pipeline(&a, &a, 3, 2, Rational::new(3, 10), &PipelineOptions::default()).unwrap();
    if let Some(w) = &stop.witness {
        assert!(w.is_sumfree_wrt(&a).unwrap());
        assert!(sumfree::solvers::is_summing(&a, &a, 3).is_ok_and(|s| !s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unif_step_invariants(seed in 0u64..1000, dens in 0.1f64..0.9, tenths in 1i64..6) {
        let v = FieldSpace::new(3, 3).unwrap();
        let a = random_set(&v, dens, seed);
        let s = GroupSet::full(v.ambient()).unwrap();
        let delta = Rational::new(tenths, 10);
        let step = unif_step(&whole(&v), &a, delta).unwrap();
        if let Some(r) = &step.refinement {
            prop_assert!(cover_check(&r.cover, &s));
            let d = BigRational::new(BigInt::from(tenths), BigInt::from(10));
            prop_assert!(r.increase() >= &d * &d * &d / BigRational::from_integer(2.into()));
            for ra in &r.refined {
                prop_assert!(BigRational::from_integer(BigInt::from(ra.gamma)) * &d * &d <= BigRational::from_integer(4.into()));
                prop_assert!(ra.codim_drop <= ra.gamma);
                prop_assert!(ra.gain_ok);
            }
        } else {
            prop_assert!(step.certified);
        }
    }

    #[test]
    fn uniformize_stays_within_cap(seed in 0u64..1000, dens in 0.2f64..0.8, r in 0u32..3) {
        let v = FieldSpace::new(5, 2).unwrap();
        let a = random_set(&v, dens, seed);
        let s = GroupSet::full(v.ambient()).unwrap();
        let delta = Rational::new(1, 5);
        let (out, trace) = uniformize(&whole(&v), &a, &s, delta, r).unwrap();
        prop_assert!(trace.all_checks_hold());
        prop_assert!(cover_check(&out, &s));
        let mut prev = BigRational::zero();
        for st in &trace.steps {
            prop_assert!(st.functional_before >= prev);
            prev = st.functional_after.clone();
        }
        prop_assert!(prev <= BigRational::from_integer(BigInt::from(r)));
    }

    #[test]
    fn monte_carlo_within_three_sigma(seed in 0u64..1000) {
        let v = FieldSpace::new(3, 2).unwrap();
        let full = Subspace::full(&v);
        let a = random_set(&v, 0.6, seed);
        let forb = random_set(&v, 0.3, seed ^ 0xabc);
        let exact = count_tuples(&v, 0, &full, &a, &forb, 2, CountMode::Exact).unwrap().value;
        let mc = count_tuples(&v, 0, &full, &a, &forb, 2, CountMode::MonteCarlo { samples: 4000, seed }).unwrap();
        prop_assert!((mc.value - exact).abs() <= 3.0 * mc.std_err + 2.0 / 4000.0);
    }
}
