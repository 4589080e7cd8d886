//! Additive energy, symmetry sets and hereditary energy, with verifiers for
//! the standard facts about hereditarily energetic sets.
//!
//! A set `A` is `nu`-hereditarily energetic when `E(S) |A| >= nu |S|^4` for
//! every non-empty `S ⊆ A`. The largest such `nu` is written `nu*(A)`.

use std::collections::BTreeMap;

use num::{BigInt, ToPrimitive};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::report::{Verdict, VerificationReport};
use crate::sets::GroupSet;
use crate::solvers::is_summing;
use crate::Rational;

/// Largest set whose subsets are enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnergyReport {
    pub energy: u64,
    /// `s -> r_{A+A}(s)`, keyed by element code.
    pub representations: BTreeMap<i64, u64>,
}

pub fn additive_energy(a: &GroupSet) -> Result<EnergyReport> {
    let g = a.ambient();
    let mut reps: BTreeMap<i64, u64> = BTreeMap::new();
    for &x in a.codes() {
        for &y in a.codes() {
            *reps.entry(g.add(x, y)?).or_default() += 1;
        }
    }
    let energy = reps.values().map(|&r| r * r).sum();
    Ok(EnergyReport { energy, representations: reps })
}

pub fn energy(a: &GroupSet) -> Result<u64> {
    Ok(additive_energy(a)?.energy)
}

/// `{x : |A ∩ (A + x)| > nu |A|}`.
pub fn symmetry_set(a: &GroupSet, nu: Rational) -> Result<GroupSet> {
    if a.is_empty() {
        return Err(invalid("symmetry set of the empty set"));
    }
    if nu <= Rational::from_integer(0) || nu > Rational::from_integer(1) {
        return Err(invalid(format!("nu = {nu} must lie in (0, 1]")));
    }
    let g = a.ambient();
    let mut overlap: BTreeMap<i64, i64> = BTreeMap::new();
    for &x in a.codes() {
        for &y in a.codes() {
            *overlap.entry(g.sub(x, y)?).or_default() += 1;
        }
    }
    let (num, den) = (*nu.numer() as i128, *nu.denom() as i128);
    let n = a.len() as i128;
    let keep = overlap.into_iter().filter(|&(_, c)| c as i128 * den > num * n).map(|(d, _)| d);
    GroupSet::new(g.clone(), keep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetMode {
    Exhaustive,
    /// Random non-empty subsets plus the whole set.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HereditaryCoefficient {
    pub nu_star: Rational,
    pub witness: Vec<i64>,
    pub mode: SubsetMode,
}

/// Energy statistics of the current subset during a walk over subsets.
pub struct SubsetState<'a> {
    codes: &'a [i64],
    pair_index: Vec<u32>,
    counts: Vec<u64>,
    member: Vec<bool>,
    size: usize,
    energy: u64,
    distinct_sums: usize,
}

impl<'a> SubsetState<'a> {
    fn new(a: &'a GroupSet) -> Result<Self> {
        let n = a.len();
        let sums = a.sumset(a)?;
        let g = a.ambient();
        let mut pair_index = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                let s = g.add(a.codes()[i], a.codes()[j])?;
                pair_index[i * n + j] = sums.codes().binary_search(&s).expect("sum present") as u32;
            }
        }
        Ok(SubsetState {
            codes: a.codes(),
            pair_index,
            counts: vec![0; sums.len()],
            member: vec![false; n],
            size: 0,
            energy: 0,
            distinct_sums: 0,
        })
    }

    fn bump(&mut self, idx: usize, delta: i64) {
        let c = self.counts[idx] as i64;
        let nc = c + delta;
        self.energy = (self.energy as i64 + nc * nc - c * c) as u64;
        if c == 0 && nc > 0 {
            self.distinct_sums += 1;
        } else if c > 0 && nc == 0 {
            self.distinct_sums -= 1;
        }
        self.counts[idx] = nc as u64;
    }

    fn toggle(&mut self, i: usize) {
        let n = self.codes.len();
        let adding = !self.member[i];
        let sign = if adding { 1 } else { -1 };
        self.member[i] = false;
        for j in 0..n {
            if self.member[j] {
                self.bump(self.pair_index[i * n + j] as usize, 2 * sign);
            }
        }
        self.bump(self.pair_index[i * n + i] as usize, sign);
        self.member[i] = adding;
        if adding {
            self.size += 1;
        } else {
            self.size -= 1;
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn energy(&self) -> u64 {
        self.energy
    }

    /// `|S + S|`.
    pub fn sumset_size(&self) -> usize {
        self.distinct_sums
    }

    pub fn elements(&self) -> Vec<i64> {
        self.codes.iter().zip(&self.member).filter(|(_, &m)| m).map(|(&c, _)| c).collect()
    }
}

/// Calls `visit` on every non-empty subset (Gray code order) or on a seeded
/// sample. Returns the number of subsets visited.
pub fn for_each_subset(a: &GroupSet, mode: SubsetMode, mut visit: impl FnMut(&SubsetState<'_>)) -> Result<u64> {
    let n = a.len();
    let mut state = SubsetState::new(a)?;
    match mode {
        SubsetMode::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::Unsupported(format!(
                    "exhaustive subset enumeration is limited to {EXHAUSTIVE_LIMIT} elements, got {n}"
                )));
            }
            for step in 1u64..(1 << n) {
                state.toggle(step.trailing_zeros() as usize);
                visit(&state);
            }
            Ok((1u64 << n) - 1)
        }
        SubsetMode::Sampled { samples, seed } => {
            if n == 0 {
                return Ok(0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut visited = 0;
            for s in 0..=samples {
                let chosen: Vec<usize> = if s == 0 {
                    (0..n).collect()
                } else {
                    let size = rng.gen_range(1..=n);
                    sample(&mut rng, n, size).into_vec()
                };
                for &i in &chosen {
                    state.toggle(i);
                }
                visit(&state);
                visited += 1;
                for &i in &chosen {
                    state.toggle(i);
                }
            }
            Ok(visited)
        }
    }
}

/// Exact `nu*(A)` (exhaustive) or an upper bound on it (sampled).
pub fn hereditary_coefficient(a: &GroupSet, mode: SubsetMode) -> Result<HereditaryCoefficient> {
    if a.is_empty() {
        return Err(invalid("hereditary coefficient of the empty set"));
    }
    let n = a.len() as u128;
    // Minimise E(S) n / |S|^4 by cross-multiplication.
    let mut best: Option<(u128, u128, Vec<i64>)> = None;
    for_each_subset(a, mode, |s| {
        let num = s.energy() as u128 * n;
        let den = (s.size() as u128).pow(4);
        if best.as_ref().is_none_or(|(bn, bd, _)| num * bd < bn * den) {
            best = Some((num, den, s.elements()));
        }
    })?;
    let (num, den, witness) = best.expect("at least one subset");
    Ok(HereditaryCoefficient { nu_star: ratio(num, den)?, witness, mode })
}

fn ratio(num: u128, den: u128) -> Result<Rational> {
    let g = num::integer::gcd(num, den);
    let (n, d) = (num / g, den / g);
    match (i64::try_from(n), i64::try_from(d)) {
        (Ok(n), Ok(d)) => Ok(Rational::new(n, d)),
        _ => Err(Error::Overflow("rational reduction")),
    }
}

fn rat_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Relative slack `lhs / rhs - 1` for display; exact verdicts come from
/// integer comparisons.
fn slack(lhs: u128, rhs: u128) -> f64 {
    if rhs == 0 {
        f64::INFINITY
    } else {
        lhs as f64 / rhs as f64 - 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HedPart {
    /// `E(S) >= |S|^4 / |S + S|` for every `S ⊆ A`.
    SmallDoubling,
    /// `nu*(A') >= (|A'|/|A|) nu*(A)` for the given `A' ⊆ A`.
    Monotone { sub: GroupSet },
    /// `nu*(A ∪ A') >= min(nu*(A), nu*(A')) / 8`.
    Union { other: GroupSet },
    /// With `E(A) >= nu |A|^3` (default `nu = E(A)/|A|^3`), every
    /// `S ⊆ Sym_{nu/2}(A)` has `E(S) |A| >= (nu/2)^4 |S|^4`.
    Symmetry { nu: Option<Rational> },
}

pub fn check_hed(a: &GroupSet, part: &HedPart, mode: SubsetMode) -> Result<VerificationReport> {
    match part {
        HedPart::SmallDoubling => hed_small_doubling(a, mode),
        HedPart::Monotone { sub } => hed_monotone(a, sub, mode),
        HedPart::Union { other } => hed_union(a, other, mode),
        HedPart::Symmetry { nu } => hed_symmetry(a, *nu, mode),
    }
}

fn hed_small_doubling(a: &GroupSet, mode: SubsetMode) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new("hed1");
    let mut failures = Vec::new();
    rep.cases = for_each_subset(a, mode, |s| {
        let lhs = s.energy() as u128 * s.sumset_size() as u128;
        let rhs = (s.size() as u128).pow(4);
        rep.observe_margin(slack(lhs, rhs));
        if lhs < rhs {
            failures.push(json!({ "subset": s.elements(), "energy": s.energy(), "sumset": s.sumset_size() }));
        }
    })?;
    for f in failures {
        rep.counterexample(f);
    }
    Ok(rep)
}

fn hed_monotone(a: &GroupSet, sub: &GroupSet, mode: SubsetMode) -> Result<VerificationReport> {
    if sub.is_empty() || !sub.is_subset(a) {
        return Ok(VerificationReport::hypothesis_violated("hed2", "A' must be a non-empty subset of A"));
    }
    let mut rep = VerificationReport::new("hed2");
    let nu_a = hereditary_coefficient(a, mode)?.nu_star;
    let nu_sub = hereditary_coefficient(sub, mode)?.nu_star;
    let eps = Rational::new(sub.len() as i64, a.len() as i64);
    rep.cases = 1;
    rep.observe_margin(rat_f64(nu_sub - eps * nu_a));
    rep.details = json!({ "nu_a": nu_a.to_string(), "nu_sub": nu_sub.to_string(), "eps": eps.to_string() });
    if mode != SubsetMode::Exhaustive {
        rep.details["note"] = json!("sampled values are upper bounds on nu*");
    }
    if nu_sub < eps * nu_a {
        rep.counterexample(json!({ "a": a.codes(), "sub": sub.codes() }));
    }
    Ok(rep)
}

fn hed_union(a: &GroupSet, other: &GroupSet, mode: SubsetMode) -> Result<VerificationReport> {
    if a.is_empty() || other.is_empty() {
        return Ok(VerificationReport::hypothesis_violated("hed3", "both sets must be non-empty"));
    }
    let union = a.union(other)?;
    let mut rep = VerificationReport::new("hed3");
    let nu = hereditary_coefficient(a, mode)?.nu_star.min(hereditary_coefficient(other, mode)?.nu_star);
    let nu_union = hereditary_coefficient(&union, mode)?.nu_star;
    let bound = nu / 8;
    rep.cases = 1;
    rep.observe_margin(rat_f64(nu_union - bound));
    rep.details = json!({ "nu": nu.to_string(), "nu_union": nu_union.to_string() });
    if nu_union < bound {
        rep.counterexample(json!({ "a": a.codes(), "other": other.codes() }));
    }
    Ok(rep)
}

fn hed_symmetry(a: &GroupSet, nu: Option<Rational>, mode: SubsetMode) -> Result<VerificationReport> {
    if a.is_empty() {
        return Ok(VerificationReport::hypothesis_violated("hed4", "A must be non-empty"));
    }
    let n = a.len() as i64;
    let e = energy(a)? as i64;
    let nu = nu.unwrap_or_else(|| Rational::new(e, n * n * n));
    if nu <= Rational::from_integer(0) || nu * Rational::from_integer(n * n * n) > Rational::from_integer(e) {
        return Ok(VerificationReport::hypothesis_violated("hed4", format!("E(A) >= nu |A|^3 fails for nu = {nu}")));
    }
    let half = nu / 2;
    let sym = symmetry_set(a, half)?;
    let mut rep = VerificationReport::new("hed4");
    // Size of the symmetry set, |Sym| >= nu |A| / 2.
    if Rational::from_integer(sym.len() as i64) < half * n {
        rep.counterexample(json!({ "a": a.codes(), "nu": nu.to_string(), "sym_size": sym.len() }));
    }
    // E(S) |A| >= (nu/2)^4 |S|^4, i.e. E(S) |A| q^4 >= p^4 |S|^4 for nu/2 = p/q.
    let (p, q) = (BigInt::from(*half.numer()), BigInt::from(*half.denom()));
    let (p4, q4) = (p.pow(4), q.pow(4));
    let mut failures = Vec::new();
    rep.cases = for_each_subset(&sym, mode, |s| {
        let lhs = BigInt::from(s.energy()) * n * &q4;
        let rhs = &p4 * BigInt::from(s.size()).pow(4);
        let (l, r) = (lhs.to_f64().unwrap_or(f64::MAX), rhs.to_f64().unwrap_or(f64::MAX));
        rep.observe_margin(l / r - 1.0);
        if lhs < rhs {
            failures.push(json!({ "subset": s.elements(), "energy": s.energy() }));
        }
    })?;
    for f in failures {
        rep.counterexample(f);
    }
    rep.details = json!({ "nu": nu.to_string(), "sym": sym.codes() });
    Ok(rep)
}

/// With `K = |X|/|A|` and `nu = 1/(K k^4)`, checks `E(S) |X| k^4 >= |S|^4`
/// for every `S ⊆ A`; when `|A| >= k^4` also checks `E(S) |A| >= |S|^4` on
/// subsets with `|S| <= k^2`.
pub fn check_hen(a: &GroupSet, x: &GroupSet, k: usize, mode: SubsetMode) -> Result<VerificationReport> {
    if k < 2 {
        return Err(invalid("k must be at least 2"));
    }
    if x.is_empty() || a.is_empty() {
        return Ok(VerificationReport::hypothesis_violated("hen", "A and X must be non-empty"));
    }
    if !is_summing(a, x, k)? {
        return Ok(VerificationReport::hypothesis_violated("hen", format!("A is not ({k},X)-summing")));
    }
    let mut rep = VerificationReport::new("hen");
    let k4 = (k as u128).pow(4);
    let (na, nx) = (a.len() as u128, x.len() as u128);
    let small_branch = na >= k4;
    let mut failures = Vec::new();
    rep.cases = for_each_subset(a, mode, |s| {
        let size4 = (s.size() as u128).pow(4);
        let lhs = s.energy() as u128 * nx * k4;
        rep.observe_margin(slack(lhs, size4));
        if lhs < size4 {
            failures.push(json!({ "subset": s.elements(), "branch": "nu", "energy": s.energy() }));
        }
        if small_branch && (s.size() as u128) <= (k as u128).pow(2) && s.energy() as u128 * na < size4 {
            failures.push(json!({ "subset": s.elements(), "branch": "small", "energy": s.energy() }));
        }
    })?;
    for f in failures {
        rep.counterexample(f);
    }
    rep.details = json!({ "K": format!("{}/{}", nx, na), "small_branch_checked": small_branch });
    if a.len() <= k * k {
        rep.details["note"] = json!("no subset exceeds k^2 elements");
    }
    Ok(rep)
}

/// `|A \ A_{eps^2 nu}|^2 <= 6 eps^2 |A|^2` with `nu = nu*(A)`, plus the
/// intermediate energy bound `E(A⁻) <= 6 eps^2 nu |A| |A⁻|^2`.
pub fn check_energy_lemma(a: &GroupSet, eps: Rational) -> Result<VerificationReport> {
    if !a.ambient().is_integers() {
        return Err(Error::Unsupported("2-adic levels need Z".into()));
    }
    if eps <= Rational::from_integer(0) || eps > Rational::from_integer(1) {
        return Err(invalid(format!("eps = {eps} must lie in (0, 1]")));
    }
    if a.is_empty() {
        return Ok(VerificationReport::hypothesis_violated("energy", "A must be non-empty"));
    }
    let nu = hereditary_coefficient(a, SubsetMode::Exhaustive)?.nu_star;
    let threshold = eps * eps * nu;
    let (_, heavy) = a.heavy_levels(threshold)?;
    let light = a.difference(&heavy)?;
    let n = a.len() as i64;
    let l = light.len() as i64;
    let lhs = Rational::from_integer(l * l);
    let rhs = eps * eps * Rational::from_integer(6 * n * n);
    let mut rep = VerificationReport::new("energy");
    if rhs >= Rational::from_integer(n * n) {
        rep.verdict = Verdict::Vacuous;
    }
    rep.cases = 1;
    rep.observe_margin(rat_f64(rhs - lhs));
    if lhs > rhs {
        rep.counterexample(json!({ "a": a.codes(), "eps": eps.to_string(), "light": light.codes() }));
    }
    let e_light = energy(&light)? as i64;
    let chain = Rational::from_integer(6 * n * l * l) * threshold;
    if Rational::from_integer(e_light) > chain {
        rep.counterexample(json!({ "a": a.codes(), "eps": eps.to_string(), "chain": "energy of light part" }));
    }
    rep.details = json!({ "nu_star": nu.to_string(), "light": light.len(), "energy_light": e_light });
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntLemmaOutcome {
    /// Least `1 <= j <= r` with `|(2^j S) ∩ A| < kappa |A|`.
    pub found: Option<u32>,
    /// `|(2^j S) ∩ A|` for each examined `j`, starting at 1.
    pub sizes: Vec<usize>,
}

pub fn check_int_lemma(a: &GroupSet, s: &GroupSet, kappa: Rational, r: u32) -> Result<IntLemmaOutcome> {
    if !a.ambient().is_integers() || !s.ambient().is_integers() {
        return Err(Error::Unsupported("dilates by powers of two are checked over Z".into()));
    }
    let mut sizes = Vec::new();
    let target = kappa * a.len() as i64;
    for j in 1..=r {
        // Elements whose dilate overflows cannot lie in A.
        let hits = s
            .iter()
            .filter_map(|x| 1i64.checked_shl(j).and_then(|p| if j < 63 { x.checked_mul(p) } else { None }))
            .filter(|&y| a.contains(y))
            .count();
        sizes.push(hits);
        if Rational::from_integer(hits as i64) < target {
            return Ok(IntLemmaOutcome { found: Some(j), sizes });
        }
    }
    Ok(IntLemmaOutcome { found: None, sizes })
}
