//! Covering numbers `C(X;Y) = min{|T| : X ⊆ T + Y}` and the computable
//! sandwich around their homomorphism-stable variant.

use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::AmbientGroup;
use crate::sets::GroupSet;

/// Exact search is attempted when `|X|` is at most this...
pub const EXACT_MAX_POINTS: usize = 64;
/// ...or when a greedy cover already has at most this many translates.
pub const EXACT_MAX_COVER: usize = 20;

/// Dominance pruning is quadratic in the number of candidates.
const DOMINANCE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    Exact,
    Greedy,
}

/// A cover of `X` by translates `t + Y`, or `None` when none exists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cover {
    pub translates: Vec<i64>,
    /// True when `translates.len()` is known to be minimal.
    pub optimal: bool,
}

/// Candidate translates with the indices of `X` each one covers.
struct Candidates {
    n: usize,
    translates: Vec<i64>,
    covers: Vec<Vec<usize>>,
}

impl Candidates {
    fn build(x: &GroupSet, y: &GroupSet) -> Result<Self> {
        let g = x.ambient();
        let mut index: HashMap<i64, usize> = HashMap::new();
        let mut translates = Vec::new();
        let mut covers: Vec<Vec<usize>> = Vec::new();
        for (i, xv) in x.iter().enumerate() {
            for yv in y.iter() {
                let t = g.sub(xv, yv)?;
                let slot = *index.entry(t).or_insert_with(|| {
                    translates.push(t);
                    covers.push(Vec::new());
                    translates.len() - 1
                });
                if covers[slot].last() != Some(&i) {
                    covers[slot].push(i);
                }
            }
        }
        Ok(Candidates { n: x.len(), translates, covers })
    }

    /// Largest-coverage-first with lazy re-scoring; ties go to the smaller translate.
    fn greedy(&self) -> Vec<usize> {
        let mut covered = vec![false; self.n];
        let mut left = self.n;
        let mut heap: BinaryHeap<(usize, std::cmp::Reverse<i64>, usize)> = self
            .covers
            .iter()
            .enumerate()
            .map(|(c, v)| (v.len(), std::cmp::Reverse(self.translates[c]), c))
            .collect();
        let mut chosen = Vec::new();
        while left > 0 {
            let Some((score, key, c)) = heap.pop() else { break };
            let fresh = self.covers[c].iter().filter(|&&i| !covered[i]).count();
            if fresh < score {
                if fresh > 0 {
                    heap.push((fresh, key, c));
                }
                continue;
            }
            for &i in &self.covers[c] {
                if !covered[i] {
                    covered[i] = true;
                    left -= 1;
                }
            }
            chosen.push(c);
        }
        chosen
    }

    fn bitsets(&self) -> Vec<Vec<u64>> {
        let words = self.n.div_ceil(64);
        let mut sets: Vec<Vec<u64>> = self
            .covers
            .iter()
            .map(|v| {
                let mut b = vec![0u64; words];
                for &i in v {
                    b[i / 64] |= 1 << (i % 64);
                }
                b
            })
            .collect();
        sets.sort();
        sets.dedup();
        sets
    }
}

fn popcount(b: &[u64]) -> usize {
    b.iter().map(|w| w.count_ones() as usize).sum()
}

struct ExactSearch {
    sets: Vec<Vec<u64>>,
    /// For each point, the candidates covering it.
    by_point: Vec<Vec<usize>>,
    best: Vec<usize>,
}

impl ExactSearch {
    fn new(cands: &Candidates, incumbent: Vec<usize>) -> Self {
        let mut sets = cands.bitsets();
        // Drop candidates whose coverage is contained in another's.
        if sets.len() <= DOMINANCE_LIMIT {
            let snapshot = sets.clone();
            sets.retain(|s| !snapshot.iter().any(|o| o != s && s.iter().zip(o).all(|(a, b)| a & !b == 0)));
        }
        let mut by_point = vec![Vec::new(); cands.n];
        for (c, s) in sets.iter().enumerate() {
            for (i, slot) in by_point.iter_mut().enumerate() {
                if s[i / 64] >> (i % 64) & 1 == 1 {
                    slot.push(c);
                }
            }
        }
        // The incumbent is only used for its size; indices are into `sets`.
        let best = (0..incumbent.len()).map(|_| usize::MAX).collect();
        ExactSearch { sets, by_point, best }
    }

    fn run(&mut self, uncovered: Vec<u64>, chosen: &mut Vec<usize>) {
        let left = popcount(&uncovered);
        if left == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        let widest = self.sets.iter().map(|s| popcount_and(s, &uncovered)).max().unwrap_or(0);
        if widest == 0 || chosen.len() + left.div_ceil(widest) >= self.best.len() {
            return;
        }
        let pivot = (0..self.by_point.len())
            .filter(|&i| uncovered[i / 64] >> (i % 64) & 1 == 1)
            .min_by_key(|&i| self.by_point[i].len())
            .expect("some point is uncovered");
        let mut options = self.by_point[pivot].clone();
        options.sort_by_key(|&c| std::cmp::Reverse(popcount_and(&self.sets[c], &uncovered)));
        for c in options {
            let next: Vec<u64> = uncovered.iter().zip(&self.sets[c]).map(|(u, s)| u & !s).collect();
            chosen.push(c);
            self.run(next, chosen);
            chosen.pop();
        }
    }
}

fn popcount_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

/// A cover of `X` by translates of `Y`. Exact mode refuses instances outside
/// the documented size limits.
pub fn cover(x: &GroupSet, y: &GroupSet, mode: CoverMode) -> Result<Option<Cover>> {
    x.ambient().ensure_same(y.ambient())?;
    if x.is_empty() {
        return Ok(Some(Cover { translates: Vec::new(), optimal: true }));
    }
    if y.is_empty() {
        return Ok(None);
    }
    let cands = Candidates::build(x, y)?;
    let greedy = cands.greedy();
    let greedy_translates = || {
        let mut t: Vec<i64> = greedy.iter().map(|&c| cands.translates[c]).collect();
        t.sort_unstable();
        t
    };
    if mode == CoverMode::Greedy || greedy.len() <= 1 {
        let optimal = greedy.len() <= 1;
        return Ok(Some(Cover { translates: greedy_translates(), optimal }));
    }
    if x.len() > EXACT_MAX_POINTS && greedy.len() > EXACT_MAX_COVER {
        return Err(Error::Unsupported(format!(
            "exact covering needs |X| <= {EXACT_MAX_POINTS} or a cover of size <= {EXACT_MAX_COVER}"
        )));
    }
    let mut search = ExactSearch::new(&cands, greedy.clone());
    let words = cands.n.div_ceil(64);
    let mut all = vec![u64::MAX; words];
    if cands.n % 64 != 0 {
        all[words - 1] = (1u64 << (cands.n % 64)) - 1;
    }
    search.run(all, &mut Vec::new());
    if search.best.contains(&usize::MAX) {
        return Ok(Some(Cover { translates: greedy_translates(), optimal: true }));
    }
    // Map each chosen coverage pattern back to a translate realizing it.
    let codes = x.codes();
    let mut translates = Vec::new();
    for &c in &search.best {
        let pattern = &search.sets[c];
        let members: Vec<usize> = (0..cands.n).filter(|&i| pattern[i / 64] >> (i % 64) & 1 == 1).collect();
        let t = cands
            .translates
            .iter()
            .zip(&cands.covers)
            .find(|(_, v)| **v == members)
            .map(|(t, _)| *t)
            .ok_or_else(|| invalid(format!("lost the translate covering {:?}", members.iter().map(|&i| codes[i]).collect::<Vec<_>>())))?;
        translates.push(t);
    }
    translates.sort_unstable();
    Ok(Some(Cover { translates, optimal: true }))
}

/// `C(X;Y)`, with `None` standing for infinity.
pub fn covering_number(x: &GroupSet, y: &GroupSet, mode: CoverMode) -> Result<Option<usize>> {
    Ok(cover(x, y, mode)?.map(|c| c.translates.len()))
}

/// True iff `X ⊆ T + Y`.
pub fn is_cover(x: &GroupSet, y: &GroupSet, translates: &[i64]) -> Result<bool> {
    let g = x.ambient();
    for xv in x.iter() {
        let mut hit = false;
        for &t in translates {
            if y.contains(g.sub(xv, t)?) {
                hit = true;
                break;
            }
        }
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A maximal `T ⊆ X` whose translates `t + Y` are pairwise disjoint, taken
/// in increasing order of `X`. Then `X ⊆ T + Y - Y` and `|T| |Y| <= |X + Y|`.
pub fn ruzsa_cover(x: &GroupSet, y: &GroupSet) -> Result<Vec<i64>> {
    x.ambient().ensure_same(y.ambient())?;
    let g = x.ambient();
    let mut used = std::collections::HashSet::new();
    let mut t = Vec::new();
    for xv in x.iter() {
        let shifted = y.iter().map(|yv| g.add(xv, yv)).collect::<Result<Vec<_>>>()?;
        if shifted.iter().all(|s| !used.contains(s)) {
            used.extend(shifted);
            t.push(xv);
        }
    }
    Ok(t)
}

/// A homomorphism `(prod Z/n_i) -> (prod Z/m_j)` given by an integer matrix
/// with one row per target coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinearMap {
    pub target: AmbientGroup,
    pub matrix: Vec<Vec<i64>>,
}

impl LinearMap {
    fn validate(&self, source: &AmbientGroup) -> Result<()> {
        let src = source.ensure_finite()?;
        let tgt = self.target.ensure_finite()?;
        if self.matrix.len() != tgt.len() || self.matrix.iter().any(|r| r.len() != src.len()) {
            return Err(invalid("map matrix must be (target rank) x (source rank)"));
        }
        for (row, &m) in self.matrix.iter().zip(tgt) {
            for (&a, &n) in row.iter().zip(src) {
                if (a as i128 * n as i128).rem_euclid(m as i128) != 0 {
                    return Err(invalid(format!("coefficient {a} is not well defined from Z/{n} to Z/{m}")));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, source: &AmbientGroup, x: i64) -> i64 {
        let r = source.residues_of(x);
        let tgt = self.target.moduli().expect("validated finite target");
        let out: Vec<u64> = self
            .matrix
            .iter()
            .zip(tgt)
            .map(|(row, &m)| {
                let s: i128 = row.iter().zip(&r).map(|(&a, &ri)| a as i128 * ri as i128).sum();
                s.rem_euclid(m as i128) as u64
            })
            .collect();
        self.target.code_of(&out)
    }
}

/// Evidence that `C♭(X;Y) <= C(W;Z)`: a map `phi` with `X ⊆ phi^-1(W)` and
/// `phi^-1(Z - Z) ⊆ Y`. `map = None` is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlatCertificate {
    pub map: Option<LinearMap>,
    pub w: GroupSet,
    pub z: GroupSet,
}

impl FlatCertificate {
    /// Identity certificate with `W = X` and a greedily grown `Z` satisfying
    /// `Z - Z ⊆ Y`.
    pub fn identity_default(x: &GroupSet, y: &GroupSet) -> Result<Self> {
        let g = x.ambient();
        let mut z: Vec<i64> = Vec::new();
        if y.contains(0) {
            z.push(0);
            for c in y.iter().filter(|&c| c != 0) {
                let mut ok = true;
                for &e in &z {
                    if !y.contains(g.sub(c, e)?) || !y.contains(g.sub(e, c)?) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    z.push(c);
                }
            }
        }
        Ok(FlatCertificate { map: None, w: x.clone(), z: GroupSet::new(g.clone(), z)? })
    }

    pub fn verify(&self, x: &GroupSet, y: &GroupSet) -> Result<()> {
        x.ambient().ensure_same(y.ambient())?;
        let dz = self.z.difference_set(&self.z)?;
        match &self.map {
            None => {
                if !x.is_subset(&self.w) {
                    return Err(invalid("certificate rejected: X is not contained in W"));
                }
                if !dz.is_subset(y) {
                    return Err(invalid("certificate rejected: Z - Z is not contained in Y"));
                }
            }
            Some(map) => {
                let g = x.ambient();
                map.validate(g)?;
                self.w.ambient().ensure_same(&map.target)?;
                if let Some(bad) = x.iter().find(|&v| !self.w.contains(map.apply(g, v))) {
                    return Err(invalid(format!("certificate rejected: phi({bad}) is not in W")));
                }
                for v in g.elements()? {
                    if dz.contains(map.apply(g, v)) && !y.contains(v) {
                        return Err(invalid(format!("certificate rejected: {v} lies in phi^-1(Z - Z) but not in Y")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `lower <= C♭(X;Y) <= upper`; `None` stands for infinity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlatBounds {
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    /// False when the lower bound fell back to `ceil(|X| / |Y|)`.
    pub lower_exact: bool,
}

fn best_count(x: &GroupSet, y: &GroupSet) -> Result<(Option<usize>, bool)> {
    match cover(x, y, CoverMode::Exact) {
        Ok(c) => Ok((c.map(|c| c.translates.len()), true)),
        Err(Error::Unsupported(_)) => Ok((covering_number(x, y, CoverMode::Greedy)?, false)),
        Err(e) => Err(e),
    }
}

pub fn cflat_bounds(x: &GroupSet, y: &GroupSet, certificates: &[FlatCertificate]) -> Result<FlatBounds> {
    let (lower, lower_exact) = match best_count(x, y)? {
        (c, true) => (c, true),
        (_, false) => (Some(x.len().div_ceil(y.len())), false),
    };
    let default;
    let certs = if certificates.is_empty() {
        default = [FlatCertificate::identity_default(x, y)?];
        &default[..]
    } else {
        certificates
    };
    let mut upper: Option<usize> = None;
    for cert in certs {
        cert.verify(x, y)?;
        if let (Some(c), _) = best_count(&cert.w, &cert.z)? {
            upper = Some(upper.map_or(c, |u| u.min(c)));
        }
    }
    Ok(FlatBounds { lower, upper, lower_exact })
}
