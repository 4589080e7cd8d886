//! Corpora and per-instance checks behind `sumfree verify`.

use std::collections::BTreeMap;

use clap::ValueEnum;
use num::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sumfree::constructions::rng;
use sumfree::energy::{check_energy_lemma, check_hed, check_hen, check_int_lemma, HedPart, SubsetMode};
use sumfree::fourier::{check_inv, parseval_spectrum_cover, DenseFunction};
use sumfree::fpmodel::{ct_bound_check, lemma_c_check, FieldSpace, LemmaCInput, Subspace};
use sumfree::io::set_to_value;
use sumfree::solvers::{max_sumfree_subset, SolveOptions};
use sumfree::systems::{bohr_system, regularize, ClosedPairWitness, Regularized};
use sumfree::{AmbientGroup, Error, GroupSet, Rational, Result, Verdict, VerificationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    Hed1,
    Hed2,
    Hed3,
    Hed4,
    Hen,
    Energy,
    Int,
    Inv,
    Pars,
    Ubreg,
    Ct,
    LemmaC,
    SumsetBound,
}

impl Lemma {
    pub fn name(self) -> &'static str {
        match self {
            Lemma::Hed1 => "hed1",
            Lemma::Hed2 => "hed2",
            Lemma::Hed3 => "hed3",
            Lemma::Hed4 => "hed4",
            Lemma::Hen => "hen",
            Lemma::Energy => "energy",
            Lemma::Int => "int",
            Lemma::Inv => "inv",
            Lemma::Pars => "pars",
            Lemma::Ubreg => "ubreg",
            Lemma::Ct => "ct",
            Lemma::LemmaC => "lemma-c",
            Lemma::SumsetBound => "sumset-bound",
        }
    }
}

/// One corpus item. Fields a check does not use keep their defaults.
#[derive(Clone, Debug)]
pub struct Instance {
    pub a: GroupSet,
    pub x: Option<GroupSet>,
    /// For `hen`, zero means `M(A) + 1`.
    pub k: usize,
    pub z: i64,
    pub freq: i64,
    pub r: u32,
    pub eps: Rational,
    pub kappa: Rational,
    pub tau: Rational,
    pub mode: SubsetMode,
}

impl Instance {
    pub fn of(a: GroupSet) -> Self {
        Instance {
            a,
            x: None,
            k: 0,
            z: 0,
            freq: 0,
            r: 0,
            eps: Rational::zero(),
            kappa: Rational::zero(),
            tau: Rational::zero(),
            mode: SubsetMode::Exhaustive,
        }
    }

    pub fn to_value(&self) -> Value {
        json!({
            "a": set_to_value(&self.a),
            "x": self.x.as_ref().map(set_to_value),
            "k": self.k,
            "z": self.z,
            "freq": self.freq,
            "r": self.r,
            "eps": self.eps.to_string(),
            "kappa": self.kappa.to_string(),
            "tau": self.tau.to_string(),
            "mode": self.mode,
        })
    }
}

pub type Check = fn(&Instance) -> Result<VerificationReport>;

/// Corpus knobs; `None` picks the per-lemma default.
#[derive(Clone, Debug, Default)]
pub struct CorpusOptions {
    pub exhaustive_max: Option<i64>,
    pub random: Option<usize>,
    pub samples: Option<usize>,
    pub instances: Option<usize>,
    pub modulus: Option<u64>,
    pub k: Option<usize>,
    pub eps: Option<Rational>,
    pub kappa: Option<Rational>,
    pub seed: u64,
}

pub fn default_check(lemma: Lemma) -> Check {
    match lemma {
        Lemma::Hed1 => |i| check_hed(&i.a, &HedPart::SmallDoubling, i.mode),
        Lemma::Hed2 => |i| check_hed(&i.a, &HedPart::Monotone { sub: i.x.clone().unwrap_or_else(|| i.a.clone()) }, i.mode),
        Lemma::Hed3 => |i| check_hed(&i.a, &HedPart::Union { other: i.x.clone().unwrap_or_else(|| i.a.clone()) }, i.mode),
        Lemma::Hed4 => |i| check_hed(&i.a, &HedPart::Symmetry { nu: None }, i.mode),
        Lemma::Hen => check_hen_item,
        Lemma::Energy => |i| check_energy_lemma(&i.a, i.eps),
        Lemma::Int => check_int_item,
        Lemma::Inv => check_inv_item,
        Lemma::Pars => check_pars_item,
        Lemma::Ubreg => check_ubreg_item,
        Lemma::Ct => check_ct_item,
        Lemma::LemmaC => check_lemma_c_item,
        Lemma::SumsetBound => check_sumset_bound,
    }
}

fn ints(values: impl IntoIterator<Item = i64>) -> GroupSet {
    GroupSet::from_ints(values)
}

/// Every non-empty subset of `lo..=hi`.
fn all_subsets(lo: i64, hi: i64) -> Result<Vec<GroupSet>> {
    let width = hi - lo + 1;
    if !(1..=20).contains(&width) {
        return Err(Error::InvalidInput(format!("exhaustive range [{lo}, {hi}] must hold 1 to 20 integers")));
    }
    Ok((1u32..1 << width).map(|m| ints((0..width).filter(|i| m >> i & 1 == 1).map(|i| lo + i))).collect())
}

fn random_sets(count: usize, max_len: usize, lo: i64, hi: i64, seed: u64) -> Vec<GroupSet> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| {
            let len = g.gen_range(1..=max_len);
            ints((0..len).map(|_| g.gen_range(lo..=hi)))
        })
        .collect()
}

fn eps_grid() -> Vec<Rational> {
    [(1, 8), (1, 6), (1, 4), (1, 3), (1, 2)].iter().map(|&(n, d)| Rational::new(n, d)).collect()
}

/// Builds the corpus for `lemma`.
pub fn corpus(lemma: Lemma, opts: &CorpusOptions) -> Result<Vec<Instance>> {
    let seed = opts.seed;
    let mode = match opts.samples {
        Some(samples) => SubsetMode::Sampled { samples, seed },
        None => SubsetMode::Exhaustive,
    };
    let set_family = |default_max: i64, lo: i64| -> Result<Vec<GroupSet>> {
        let mut sets = all_subsets(lo, opts.exhaustive_max.unwrap_or(default_max))?;
        sets.extend(random_sets(opts.random.unwrap_or(0), 14, 0, 60, seed));
        Ok(sets)
    };
    let with_mode = |a: GroupSet| Instance { mode, ..Instance::of(a) };
    let items = match lemma {
        Lemma::SumsetBound => {
            let mut sets: Vec<GroupSet> =
                all_subsets(1, opts.exhaustive_max.unwrap_or(12))?.into_iter().filter(|s| s.len() >= 2).collect();
            let mut g = rng(seed);
            for _ in 0..opts.random.unwrap_or(10_000) {
                let len = g.gen_range(2..=64);
                sets.push(ints((0..len).map(|_| g.gen_range(-5000..=5000))));
            }
            sets.into_iter().map(Instance::of).collect()
        }
        Lemma::Hed1 => set_family(9, 0)?.into_iter().map(with_mode).collect(),
        Lemma::Hed4 => set_family(7, 0)?.into_iter().map(with_mode).collect(),
        Lemma::Hed2 => set_family(9, 0)?
            .into_iter()
            .map(|a| {
                let sub = ints(a.codes().iter().copied().step_by(2));
                Instance { x: Some(sub), ..with_mode(a) }
            })
            .collect(),
        Lemma::Hed3 => set_family(8, 0)?
            .into_iter()
            .map(|a| {
                let other = a.translate(3)?;
                Ok(Instance { x: Some(other), ..with_mode(a) })
            })
            .collect::<Result<_>>()?,
        Lemma::Hen => set_family(9, 0)?
            .into_iter()
            .map(|a| Instance { k: opts.k.unwrap_or(0), ..with_mode(a) })
            .collect(),
        Lemma::Energy => {
            let grid = opts.eps.map_or_else(eps_grid, |e| vec![e]);
            let mut out = Vec::new();
            for a in set_family(10, 0)? {
                for &eps in &grid {
                    out.push(Instance { eps, ..Instance::of(a.clone()) });
                }
            }
            out
        }
        Lemma::Int => set_family(10, 1)?
            .into_iter()
            .map(|a| Instance { kappa: opts.kappa.unwrap_or(Rational::new(1, 2)), r: 4, ..Instance::of(a) })
            .collect(),
        Lemma::Inv | Lemma::Ubreg | Lemma::Pars => {
            let n = opts.modulus.unwrap_or(4096);
            if n < 16 {
                return Err(Error::InvalidInput("modulus must be at least 16".into()));
            }
            let g = AmbientGroup::cyclic(n)?;
            let mut r = rng(seed);
            let count = opts.instances.unwrap_or(if lemma == Lemma::Pars { 6 } else { 10 });
            let mut out = Vec::new();
            for i in 0..count {
                let width = r.gen_range(1..=(n as i64 / 100).clamp(1, 40));
                let z = GroupSet::new(g.clone(), (-width..=width).map(|v| v.rem_euclid(n as i64)))?;
                let x = GroupSet::new(g.clone(), (0..n as i64).filter(|_| r.gen_bool(0.25)))?;
                out.push(Instance {
                    x: (lemma == Lemma::Pars).then_some(x),
                    freq: r.gen_range(1..n as i64),
                    tau: if i % 2 == 0 { Rational::new(1, 4) } else { Rational::new(1, 2) },
                    eps: opts.eps.unwrap_or(Rational::new(1, 2)),
                    ..Instance::of(z)
                });
            }
            out
        }
        Lemma::Ct => {
            let mut out = Vec::new();
            for (p, dim) in [(3u64, 1usize), (5, 1), (3, 2)] {
                let v = FieldSpace::new(p, dim)?;
                let q = v.order() as i64;
                let masks = 1u32 << q;
                for am in 0..masks {
                    let a = GroupSet::new(v.ambient(), (0..q).filter(|i| am >> i & 1 == 1))?;
                    for xm in 0..masks {
                        let x = GroupSet::new(v.ambient(), (0..q).filter(|i| xm >> i & 1 == 1))?;
                        out.push(Instance { x: Some(x), ..Instance::of(a.clone()) });
                    }
                }
            }
            out
        }
        Lemma::LemmaC => {
            let g = AmbientGroup::cyclic(45)?;
            let mut r = rng(seed);
            let count = opts.instances.unwrap_or(100);
            let mut out = Vec::new();
            for t in 0..count {
                let keep = 0.5 + 0.5 * (t as f64 / count as f64);
                let a = GroupSet::new(g.clone(), (0..45).filter(|_| r.gen_bool(keep)))?;
                let x = GroupSet::new(g.clone(), (0..45).filter(|_| r.gen_bool(0.03)))?;
                out.push(Instance { x: Some(x), z: r.gen_range(0..45), k: 3, ..Instance::of(a) });
            }
            out
        }
    };
    Ok(items)
}

fn check_sumset_bound(inst: &Instance) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new("sumset-bound");
    let n = inst.a.len() as i64;
    rep.cases = 1;
    if n < 2 {
        rep.verdict = Verdict::Vacuous;
        return Ok(rep);
    }
    let size = inst.a.restricted_sumset()?.len() as i64;
    rep.observe_margin((size - (2 * n - 3)) as f64);
    if size < 2 * n - 3 {
        rep.counterexample(json!({ "set": inst.a.codes(), "restricted_sumset": size }));
    }
    Ok(rep)
}

fn check_hen_item(inst: &Instance) -> Result<VerificationReport> {
    let x = inst.x.clone().unwrap_or_else(|| inst.a.clone());
    let k = if inst.k == 0 {
        (max_sumfree_subset(&inst.a, &x, &SolveOptions::default())?.size + 1).max(2)
    } else {
        inst.k
    };
    check_hen(&inst.a, &x, k, inst.mode)
}

/// Re-derives each intersection size and confirms the reported index is the
/// least one below the threshold.
fn check_int_item(inst: &Instance) -> Result<VerificationReport> {
    let out = check_int_lemma(&inst.a, &inst.a, inst.kappa, inst.r)?;
    let mut rep = VerificationReport::new("int");
    let target = inst.kappa * inst.a.len() as i64;
    let mut expected = None;
    for (j, &reported) in (1..=inst.r).zip(&out.sizes) {
        let hits = inst.a.dilate(1 << j)?.intersection_len(&inst.a);
        rep.cases += 1;
        if hits != reported {
            rep.counterexample(json!({ "j": j, "reported": reported, "recomputed": hits }));
        }
        if expected.is_none() && Rational::from_integer(hits as i64) < target {
            expected = Some(j);
        }
    }
    if expected != out.found {
        rep.counterexample(json!({ "found": out.found, "expected": expected }));
    }
    rep.details = json!({ "found": out.found, "sizes": out.sizes });
    Ok(rep)
}

fn regularized(inst: &Instance) -> Result<Regularized> {
    let g = inst.a.ambient();
    let b = bohr_system(g, &[inst.freq], Rational::new(1, 2), 24)?;
    regularize(&inst.a, &b, inst.tau)
}

fn check_inv_item(inst: &Instance) -> Result<VerificationReport> {
    let r = regularized(inst)?;
    let mut rep = VerificationReport::with_verdict("inv", Verdict::HypothesisViolated);
    for tenth in 1..=9 {
        rep.merge(check_inv(&r.witness, Rational::new(tenth, 10))?);
    }
    Ok(rep)
}

fn max_translation(w: &ClosedPairWitness) -> Rational {
    let n = w.z.len() as i64;
    w.w.iter()
        .map(|s| {
            let shifted = w.z.translate(s).expect("same ambient");
            Rational::new(2 * (n - w.z.intersection_len(&shifted) as i64), n)
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Validates the regularized witness without trusting its own validator.
fn check_ubreg_item(inst: &Instance) -> Result<VerificationReport> {
    let r = regularized(inst)?;
    let w = &r.witness;
    let mut rep = VerificationReport::new("ubreg");
    rep.cases = 1;
    let mut failed = Vec::new();
    let mut fail = |what: &'static str| failed.push(what);
    if ![&w.z, &w.w, &w.z_minus, &w.z_plus].iter().all(|s| s.contains(0) && s.is_symmetric()) {
        fail("symmetric neighbourhoods");
    }
    if !w.z_minus.sumset(&w.w)?.is_subset(&w.z) || !w.z.sumset(&w.w)?.is_subset(&w.z_plus) {
        fail("inclusions");
    }
    if Rational::from_integer(w.z_plus.len() as i64) > (Rational::from_integer(1) + w.tau) * w.z_minus.len() as i64 {
        fail("cardinality ratio");
    }
    if max_translation(w) > inst.tau {
        fail("translation distance");
    }
    let b0 = bohr_system(inst.a.ambient(), &[inst.freq], Rational::new(1, 2), 24)?;
    if !inst.a.is_subset(&w.z) || !w.z.is_subset(&inst.a.sumset(b0.level(0))?) {
        fail("sandwich");
    }
    let k = *r.doubling.numer() as f64 / *r.doubling.denom() as f64;
    let t = *inst.tau.numer() as f64 / *inst.tau.denom() as f64;
    let bound = if k <= 1.0 { 1 } else { ((k.ln() / t.ln_1p()).log2().ceil() as i64 + 1).max(1) as usize };
    rep.observe_margin(bound as f64 - r.m as f64);
    if r.m > bound {
        fail("m bound");
    }
    for what in failed {
        rep.counterexample(json!({ "failed": what }));
    }
    rep.details = json!({ "m": r.m, "j": r.j, "m_bound": bound, "doubling": r.doubling.to_string() });
    Ok(rep)
}

fn check_pars_item(inst: &Instance) -> Result<VerificationReport> {
    let r = regularized(inst)?;
    let x = inst.x.as_ref().ok_or_else(|| Error::InvalidInput("pars needs a test set".into()))?;
    let f = DenseFunction::indicator(x)?;
    let out = parseval_spectrum_cover(&f, &r.witness, inst.eps, Rational::new(1, 2), 12)?;
    let mut rep = VerificationReport::new("pars");
    rep.cases = out.spectrum.len() as u64 + 1;
    rep.tolerance_dependent = out.tolerance_dependent;
    let bound = Rational::from_integer(2) / (inst.eps * inst.eps);
    rep.observe_margin((bound - Rational::from_integer(out.lambda.len() as i64)).to_integer() as f64);
    if !out.all_verified() {
        rep.counterexample(json!({
            "disjoint": out.disjoint,
            "size_bound": out.size_bound,
            "covered": out.covered,
            "annihilated": out.annihilated,
            "lambda": out.lambda,
        }));
    }
    rep.details = json!({ "lambda": out.lambda.len(), "spectrum": out.spectrum.len() });
    Ok(rep)
}

fn check_ct_item(inst: &Instance) -> Result<VerificationReport> {
    let v = FieldSpace::of(inst.a.ambient())?;
    let full = Subspace::full(&v);
    let x = inst.x.as_ref().ok_or_else(|| Error::InvalidInput("ct needs X".into()))?;
    let mut rep = VerificationReport::with_verdict("ct", Verdict::HypothesisViolated);
    for k in [2, 3] {
        for eps in [Rational::new(1, 10), Rational::new(1, 5), Rational::new(1, 2)] {
            rep.merge(ct_bound_check(&v, 0, &full, &inst.a, x, k, eps)?);
        }
    }
    Ok(rep)
}

/// Closed subgroup pairs `<1> ⊇ <3> ⊇ <15>` in `Z/45`.
fn chain(g: &AmbientGroup) -> Result<Vec<ClosedPairWitness>> {
    let n = g.order().unwrap_or(0) as i64;
    let sets = [1usize, 3, 15]
        .iter()
        .map(|&s| GroupSet::new(g.clone(), (0..n).step_by(s)))
        .collect::<Result<Vec<_>>>()?;
    sets.windows(2)
        .map(|w| ClosedPairWitness::new(w[0].clone(), w[1].clone(), w[0].clone(), w[0].clone(), Rational::zero()))
        .collect()
}

/// Reads alpha, tau and eps off the instance and uses the smallest delta on
/// a decimal grid for which the uniformity hypothesis holds.
fn check_lemma_c_item(inst: &Instance) -> Result<VerificationReport> {
    let g = inst.a.ambient();
    let x = inst.x.as_ref().ok_or_else(|| Error::InvalidInput("lemma-c needs X".into()))?;
    let pairs = chain(g)?;
    let zs: Vec<&GroupSet> = pairs.iter().map(|p| &p.z).chain([&pairs[pairs.len() - 1].w]).collect();
    let shifted = inst.a.translate(g.neg(inst.z)?)?;
    let xs = x.translate(g.neg(g.scale(inst.z, 2)?)?)?;
    let density = |s: &GroupSet, z: &GroupSet| Rational::new(s.intersection_len(z) as i64, z.len() as i64);
    let alpha = density(&shifted, zs[0]);
    let tau = zs.iter().map(|z| (density(&shifted, z) - alpha).abs()).max().unwrap_or_else(Rational::zero);
    let eps = zs[..zs.len() - 1].iter().map(|z| density(&xs, z)).max().unwrap_or_else(Rational::zero);
    let mut last = None;
    for den in [10_000, 1000, 100, 10, 1] {
        let input = LemmaCInput { a: &inst.a, forbidden: x, z0: inst.z, pairs: &pairs, alpha, tau, eps, delta: Rational::new(1, den), k: inst.k.max(2) };
        let rep = lemma_c_check(&input)?;
        if rep.verdict != Verdict::HypothesisViolated {
            return Ok(rep);
        }
        last = Some(rep);
    }
    Ok(last.expect("grid is non-empty"))
}

/// Outcome of running a check over a corpus.
#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub lemma: Lemma,
    pub items: usize,
    pub tallies: BTreeMap<String, usize>,
    pub summary: VerificationReport,
    /// Failing items with their full instance, for replay.
    pub counterexamples: Vec<Value>,
}

const MAX_REPLAYS: usize = 32;

/// Runs `check` over `items` on the current rayon pool; results are folded
/// in item order so the summary does not depend on scheduling.
pub fn run_corpus(lemma: Lemma, items: &[Instance], check: Check) -> Result<VerifySummary> {
    let reports: Vec<VerificationReport> = items.par_iter().map(check).collect::<Result<_>>()?;
    let mut summary = VerificationReport::with_verdict(lemma.name(), Verdict::HypothesisViolated);
    let mut tallies = BTreeMap::new();
    let mut counterexamples = Vec::new();
    for (i, rep) in reports.into_iter().enumerate() {
        let key = serde_json::to_value(rep.verdict).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        *tallies.entry(key).or_insert(0) += 1;
        if rep.has_counterexample() && counterexamples.len() < MAX_REPLAYS {
            counterexamples.push(json!({ "item": i, "instance": items[i].to_value(), "report": rep }));
        }
        summary.merge(rep);
    }
    summary.check = lemma.name().to_owned();
    Ok(VerifySummary { lemma, items: items.len(), tallies, summary, counterexamples })
}
