//! Systems of neighbourhoods `B_0 ⊇ B_1 ⊇ ...` with `B_{i+1} + B_{i+1} ⊆ B_i`,
//! covering numbers, and closed pairs built from them.
//!
//! Systems here have finite depth. Each carries an integer `cover_bound`
//! that dominates `C♭(B_i; B_{i+1})` for every level pair it was built from,
//! so `log2(cover_bound)` is an upper bound on the dimension.

mod closed;
mod cover;

pub use closed::{closed_from_system, regularize, ClosedPairWitness, Regularized};
pub use cover::{
    cflat_bounds, cover, covering_number, is_cover, ruzsa_cover, Cover, CoverMode, FlatBounds, FlatCertificate,
    LinearMap, EXACT_MAX_COVER, EXACT_MAX_POINTS,
};

use num::{BigUint, One, ToPrimitive};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fourier::{max_distance_below, Pairing};
use crate::group::AmbientGroup;
use crate::sets::GroupSet;
use crate::Rational;

pub const DEFAULT_DEPTH: usize = 24;

/// Upper bound on `C(A_i; A_{i+2})` for arcs `A_i = {z : |1 - z| < 2^(2-i)}`
/// of the circle, via nine explicit translates.
const ARC_COVER: u32 = 9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct System {
    levels: Vec<GroupSet>,
    #[serde(serialize_with = "ser_big")]
    cover_bound: BigUint,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn log2_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    (v >> shift).to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
}

impl System {
    /// Validates levels and bounds the dimension with greedy covers
    /// `C(B_i; B_{i+1}) C(B_{i+1}; B_{i+2})`, taken over `i + 2 <= L`.
    pub fn new(levels: Vec<GroupSet>) -> Result<Self> {
        let mut sys = System { levels, cover_bound: BigUint::one() };
        sys.validate()?;
        let mut worst: usize = 1;
        for i in 0..sys.depth() - 1 {
            let c = |a: &GroupSet, b: &GroupSet| -> Result<usize> {
                covering_number(a, b, CoverMode::Greedy)?.ok_or_else(|| invalid("levels must be non-empty"))
            };
            let prod = c(&sys.levels[i], &sys.levels[i + 1])? * c(&sys.levels[i + 1], &sys.levels[i + 2])?;
            worst = worst.max(prod);
        }
        sys.cover_bound = BigUint::from(worst);
        Ok(sys)
    }

    pub(crate) fn from_parts(levels: Vec<GroupSet>, cover_bound: BigUint) -> Self {
        System { levels, cover_bound }
    }

    /// Checks depth, symmetric neighbourhoods and `B_{i+1} + B_{i+1} ⊆ B_i`.
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 3 {
            return Err(invalid("a system needs depth at least 2 (levels B_0, B_1, B_2)"));
        }
        let g = self.levels[0].ambient();
        for (i, b) in self.levels.iter().enumerate() {
            g.ensure_same(b.ambient())?;
            if !b.is_symmetric_neighbourhood() {
                return Err(invalid(format!("level {i} is not a symmetric neighbourhood of 0")));
            }
        }
        for i in 0..self.depth() {
            let next = &self.levels[i + 1];
            if !next.is_subset(&self.levels[i]) || !next.sumset(next)?.is_subset(&self.levels[i]) {
                return Err(invalid(format!("B_{} + B_{} is not contained in B_{i}", i + 1, i + 1)));
            }
        }
        Ok(())
    }

    pub fn ambient(&self) -> &AmbientGroup {
        self.levels[0].ambient()
    }

    /// `L` for levels `B_0..=B_L`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, i: usize) -> &GroupSet {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[GroupSet] {
        &self.levels
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|b| b.len()).collect()
    }

    pub fn cover_bound(&self) -> &BigUint {
        &self.cover_bound
    }

    /// `log2(cover_bound)`, an upper bound on the dimension.
    pub fn dim_upper(&self) -> f64 {
        log2_big(&self.cover_bound)
    }

    /// Levelwise intersection, truncated to the shallower depth.
    pub fn meet(&self, other: &System) -> Result<System> {
        self.ambient().ensure_same(other.ambient())?;
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.intersection(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(System::from_parts(levels, &self.cover_bound * &other.cover_bound))
    }

    /// `2^-m B = (B_{i+m})_i`.
    pub fn dilate(&self, m: usize) -> Result<System> {
        if m + 2 > self.depth() {
            return Err(Error::Range(format!(
                "dilating by 2^-{m} needs depth at least {}, system has {}",
                m + 2,
                self.depth()
            )));
        }
        Ok(System::from_parts(self.levels[m..].to_vec(), self.cover_bound.clone()))
    }

    /// `2^m . B = (2^m . B_i)_i`.
    pub fn multiple(&self, m: u32) -> Result<System> {
        let factor = 1i64.checked_shl(m).filter(|&f| f > 0).ok_or(Error::Overflow("2^m"))?;
        let levels = self.levels.iter().map(|b| b.dilate(factor)).collect::<Result<Vec<_>>>()?;
        Ok(System::from_parts(levels, self.cover_bound.clone()))
    }

    /// `self <= other` in the meet order, compared over the common depth.
    pub fn is_below(&self, other: &System) -> bool {
        self.levels.iter().zip(&other.levels).all(|(a, b)| a.is_subset(b))
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth < 2 {
        return Err(invalid("system depth must be at least 2"));
    }
    Ok(())
}

/// The subgroup generated by a set, built one cyclic factor at a time.
/// Stops early once it outgrows `limit`.
fn generated_subgroup(h: &GroupSet, limit: usize) -> Result<GroupSet> {
    let g = h.ambient();
    let mut span = GroupSet::singleton(g.clone(), 0)?;
    for x in h.iter() {
        if span.contains(x) {
            continue;
        }
        let mut cyclic = vec![0i64];
        let mut cur = x;
        while cur != 0 {
            cyclic.push(cur);
            cur = g.add(cur, x)?;
            if cyclic.len() > limit {
                return GroupSet::full(g.clone());
            }
        }
        span = span.sumset(&GroupSet::new(g.clone(), cyclic)?)?;
        if span.len() > limit {
            break;
        }
    }
    Ok(span)
}

/// The constant system `(H, H, ...)`.
pub fn subgroup_system(h: &GroupSet, depth: usize) -> Result<System> {
    check_depth(depth)?;
    let is_subgroup = if h.ambient().is_integers() {
        h.codes() == [0]
    } else {
        !h.is_empty() && generated_subgroup(h, h.len())? == *h
    };
    if !is_subgroup {
        return Err(invalid("set is not a subgroup"));
    }
    Ok(System::from_parts(vec![h.clone(); depth + 1], BigUint::one()))
}

/// Whole-group system.
pub fn full_system(g: &AmbientGroup, depth: usize) -> Result<System> {
    subgroup_system(&GroupSet::full(g.clone())?, depth)
}

/// Meet over the frequencies of the systems
/// `B_i = {x : |gamma(x) - 1| < 2^(2 - i - m)}` with `m` least such that
/// `2^(2 - m) <= rho`.
pub fn bohr_system(g: &AmbientGroup, frequencies: &[i64], rho: Rational, depth: usize) -> Result<System> {
    check_depth(depth)?;
    if rho <= Rational::from_integer(0) {
        return Err(invalid("rho must be positive"));
    }
    let pairing = Pairing::new(g)?;
    let order = g.order().expect("finite") as i64;
    if let Some(bad) = frequencies.iter().find(|&&t| !(0..order).contains(&t)) {
        return Err(invalid(format!("frequency {bad} is not a character of {g}")));
    }
    let mut m = 0u32;
    while m < 60 && Rational::new(4, 1) / Rational::from_integer(1 << m) > rho {
        m += 1;
    }
    let l = pairing.lcm();
    let thresholds: Vec<u64> = (0..=depth as u32)
        .map(|i| {
            let k = (i + m).min(60);
            let r = if k <= 2 { Rational::from_integer(4 >> k) } else { Rational::new(1, 1 << (k - 2)) };
            max_distance_below(l, r).expect("chord of 0 is below any positive radius")
        })
        .collect();
    let mut members: Vec<Vec<i64>> = vec![Vec::new(); depth + 1];
    for x in 0..order {
        let dist = frequencies.iter().map(|&t| pairing.distance(t, x)).max().unwrap_or(0);
        for (i, &thr) in thresholds.iter().enumerate() {
            if dist > thr {
                break;
            }
            members[i].push(x);
        }
    }
    for x in &members[0] {
        for &t in frequencies {
            if !crate::fourier::chord_below(pairing.distance(t, *x), l, rho) {
                return Err(invalid(format!("Bohr level 0 contains {x} with |gamma_{t}(x) - 1| >= rho")));
            }
        }
    }
    let nontrivial = frequencies.iter().filter(|&&t| t != 0).collect::<std::collections::BTreeSet<_>>().len();
    let levels = members.into_iter().map(|v| GroupSet::from_sorted_unchecked(g.clone(), v)).collect();
    Ok(System::from_parts(levels, BigUint::from(ARC_COVER).pow(nontrivial as u32)))
}

/// `{x_0 + sum t_j x_j : 0 <= t_j <= N_j} + H`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CosetProgression {
    pub base: i64,
    pub generators: Vec<i64>,
    pub bounds: Vec<u64>,
    pub subgroup: GroupSet,
}

/// Largest set enumerated while building progression levels.
pub const PROGRESSION_BUDGET: u64 = 1 << 22;

impl CosetProgression {
    fn validate(&self) -> Result<()> {
        if self.generators.len() != self.bounds.len() {
            return Err(invalid("one bound per generator"));
        }
        if self.bounds.iter().any(|&n| n < 1) {
            return Err(invalid("bounds must be at least 1"));
        }
        let g = self.subgroup.ambient();
        for &c in self.generators.iter().chain([&self.base]) {
            if !g.contains_code(c) {
                return Err(invalid(format!("{c} is not an element of {g}")));
            }
        }
        subgroup_system(&self.subgroup, 2).map(|_| ())
    }

    /// `{sum t_j x_j : lo_j <= t_j <= hi_j} + H`.
    fn box_sum(&self, lo: &[i64], hi: &[i64]) -> Result<GroupSet> {
        let g = self.subgroup.ambient();
        let count: u128 = lo.iter().zip(hi).map(|(a, b)| (b - a + 1) as u128).product();
        if count * self.subgroup.len() as u128 > PROGRESSION_BUDGET as u128 {
            return Err(Error::Unsupported(format!("progression exceeds {PROGRESSION_BUDGET} elements")));
        }
        let mut pts = vec![0i64];
        for ((&x, &a), &b) in self.generators.iter().zip(lo).zip(hi) {
            let mut next = Vec::with_capacity(pts.len() * (b - a + 1) as usize);
            for &p in &pts {
                for t in a..=b {
                    next.push(g.add(p, g.scale(x, t)?)?);
                }
            }
            next.sort_unstable();
            next.dedup();
            pts = next;
        }
        GroupSet::new(g.clone(), pts)?.sumset(&self.subgroup)
    }

    pub fn elements(&self) -> Result<GroupSet> {
        self.validate()?;
        let lo = vec![0; self.bounds.len()];
        let hi: Vec<i64> = self.bounds.iter().map(|&n| n as i64).collect();
        self.box_sum(&lo, &hi)?.translate(self.base)
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }
}

/// `B_i = {sum t_j x_j : |t_j| <= 2^-i N_j} + H`, with the three-way cover
/// `B_i ⊆ T_i + B_{i+1}` built and checked at every level.
pub fn coset_progression_system(p: &CosetProgression, depth: usize) -> Result<System> {
    check_depth(depth)?;
    p.validate()?;
    let g = p.subgroup.ambient();
    let mut levels = Vec::with_capacity(depth + 1);
    for i in 0..=depth as u32 {
        let hi: Vec<i64> = p.bounds.iter().map(|&n| (n >> i.min(63)) as i64).collect();
        let lo: Vec<i64> = hi.iter().map(|h| -h).collect();
        levels.push(p.box_sum(&lo, &hi)?);
    }
    for i in 0..depth {
        let steps: Vec<i64> = p.bounds.iter().map(|&n| n.div_ceil(1 << (i + 1).min(63)) as i64).collect();
        let mut t = vec![0i64];
        for (&x, &s) in p.generators.iter().zip(&steps) {
            let shift = g.scale(x, s)?;
            let mut next = Vec::with_capacity(3 * t.len());
            for &v in &t {
                next.push(v);
                next.push(g.add(v, shift)?);
                next.push(g.sub(v, shift)?);
            }
            t = next;
        }
        t.sort_unstable();
        t.dedup();
        if !is_cover(&levels[i], &levels[i + 1], &t)? {
            return Err(invalid(format!("explicit cover of level {i} failed")));
        }
    }
    let d = p.dimension() as u32;
    Ok(System::from_parts(levels, BigUint::from(ARC_COVER).pow(d)))
}
