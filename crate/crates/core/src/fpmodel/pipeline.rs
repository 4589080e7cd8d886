//! Desk-scale run of the finite-field density argument: a dense coset family,
//! a uniformized weighted cover, and the propagation of density along the
//! dilates `2^s z + Z`.

use std::collections::HashMap;

use num::{BigInt, BigRational, Zero};
use serde::Serialize;

use super::counting::{count_tuples, ct_bound_check, CountMode, EXACT_TUPLE_BUDGET};
use super::cover::{big_ratio, coset_density, cover_check, pow2_mod, WeightedCover};
use super::linalg::{FieldSpace, Subspace};
use super::unif::{big_of, uniformize, unif_step, IterationTrace};
use super::{big_f64, ser_big};
use crate::error::{invalid, Error, Result};
use crate::report::VerificationReport;
use crate::sets::GroupSet;
use crate::Rational;

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Subspaces of codimension at most this are searched for a dense coset.
    pub codim: usize,
    /// Threshold for `m(X)` on the doubled coset; defaults to `1 / (2k(k-1))`.
    pub eps0: Option<Rational>,
    /// Stop as soon as a k-subset with no pairwise sum in `X` is found.
    pub stop_on_witness: bool,
    /// Seed for Monte Carlo counts on atoms too large to integrate exactly.
    pub seed: u64,
    pub subspace_limit: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { codim: 2, eps0: None, stop_on_witness: true, seed: 0, subspace_limit: 200_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DenseCosets {
    pub subspace: Subspace,
    /// Coset representatives making up `S`.
    pub cosets: Vec<i64>,
    #[serde(serialize_with = "ser_big")]
    pub best_density: BigRational,
    pub s_size: usize,
    /// `m_S(A)`.
    #[serde(serialize_with = "ser_big")]
    pub density_on_s: BigRational,
    pub subspaces_searched: usize,
}

/// Over all subspaces `U` with `codim U <= codim`, the coset of highest
/// `A`-density (ties: larger `U`); `S` is the union of the cosets of that `U`
/// with at least half the best density.
pub fn densest_cosets(space: &FieldSpace, a: &GroupSet, codim: usize, limit: usize) -> Result<(DenseCosets, GroupSet)> {
    if a.is_empty() {
        return Err(invalid("A must be non-empty"));
    }
    let vecs: Vec<Vec<u64>> = a.iter().map(|c| space.vec_of(c)).collect();
    let mut best: Option<(u64, Subspace, HashMap<Vec<u64>, u64>)> = None;
    let mut searched = 0usize;
    for dim in (space.n.saturating_sub(codim)..=space.n).rev() {
        for u in Subspace::enumerate(space, dim, limit.saturating_sub(searched))? {
            searched += 1;
            let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
            for v in &vecs {
                *counts.entry(u.reduce(v)).or_insert(0) += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            let better = match &best {
                None => true,
                Some((bt, bu, _)) => (top as u128) * (bu.size() as u128) > (*bt as u128) * (u.size() as u128),
            };
            if better {
                best = Some((top, u, counts));
            }
        }
    }
    let (top, u, counts) = best.expect("the full space is always searched");
    let mut cosets: Vec<i64> =
        counts.iter().filter(|(_, &c)| 2 * c >= top).map(|(rep, _)| space.code_of(rep)).collect();
    cosets.sort_unstable();
    let mut s_codes = Vec::new();
    for &rep in &cosets {
        s_codes.extend(u.coset_codes(&space.vec_of(rep))?);
    }
    let s = GroupSet::new(space.ambient(), s_codes)?;
    let in_s = counts.iter().filter(|(_, &c)| 2 * c >= top).map(|(_, &c)| c).sum::<u64>();
    let out = DenseCosets {
        best_density: big_ratio(top, u.size()),
        density_on_s: big_ratio(in_s, s.len() as u64),
        s_size: s.len(),
        subspace: u,
        cosets,
        subspaces_searched: searched,
    };
    Ok((out, s))
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `m_{2^{s+1} z + Z}(X) <= eps0`: the counting lemma applies.
    Counting,
    /// The doubled coset carries `X`-mass, which passes to `A` unless `X \ A` absorbs it.
    Propagated,
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkStep {
    pub s: u32,
    pub branch: Branch,
    /// `m_{2^s z + Z}(A)`.
    pub density: f64,
    /// `m_{2^{s+1} z + Z}(X)`.
    pub next_x_mass: f64,
    /// `m_{2^{s+1} z + Z}(X \ A)`.
    pub next_excess_mass: f64,
    pub ct: Option<VerificationReport>,
    /// `C(k,2) m^(k-1) / |Z|`, the most a summing set allows.
    pub collision_bound: Option<f64>,
    /// `Q <= collision bound` (must hold when `A` is summing).
    pub collision_consistent: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomWalk {
    pub atom: usize,
    pub weight: f64,
    pub dim: usize,
    /// `m_{z+Z}(A) > nu0 / 2`.
    pub dense: bool,
    /// Every `(2^s z, Z)` with `s < r` has deviation at most `delta`.
    pub uniform: bool,
    /// `m_{2^s z + Z}(X \ A) <= eps0 / 2` for `1 <= s <= r`.
    pub light: bool,
    pub steps: Vec<WalkStep>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DilateRow {
    pub j: u32,
    pub intersection: usize,
    /// `|(2^j . S) ∩ A| / |S|`.
    pub ratio: f64,
    /// Agrees exactly with `E[m_{2^j z + Z}(A)]`.
    pub matches_cover: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelAlternative {
    /// `A` is not `(k, X)`-summing.
    NotSumming,
    /// Every dilate ratio clears `min(nu0, eps0) nu0 / 16`.
    DenseDilates,
    /// Some counting branch fired, which a large summing `A` cannot allow.
    SmallGroup,
    /// Density leaked into `X \ A`.
    LargeExcess,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelReport {
    pub p: u64,
    pub n: usize,
    pub k: usize,
    pub r: u32,
    #[serde(serialize_with = "super::ser_rational")]
    pub delta: Rational,
    #[serde(serialize_with = "super::ser_rational")]
    pub eps0: Rational,
    pub a_size: usize,
    pub x_size: usize,
    /// `|X \ A| / |A|`.
    pub eta: f64,
    pub witness: Option<GroupSet>,
    pub dense_cosets: Option<DenseCosets>,
    pub trace: Option<IterationTrace>,
    pub final_atoms: usize,
    pub walk: Vec<AtomWalk>,
    pub dilates: Vec<DilateRow>,
    pub threshold: f64,
    pub alternative: ModelAlternative,
    /// Cover identity, trace checks, per-`j` certificates and the dilate
    /// table all re-verified after the run.
    pub rechecks_ok: bool,
}

pub fn model_pipeline(
    a: &GroupSet,
    forbidden: &GroupSet,
    k: usize,
    r: u32,
    delta: Rational,
    opts: &PipelineOptions,
) -> Result<ModelReport> {
    let space = FieldSpace::of(a.ambient())?;
    if space.p == 2 {
        return Err(Error::Unsupported("the model needs odd characteristic".into()));
    }
    space.ambient().ensure_same(forbidden.ambient())?;
    if k < 2 {
        return Err(invalid("k must be at least 2"));
    }
    if delta <= Rational::zero() {
        return Err(invalid("delta must be positive"));
    }
    let eps0 = opts.eps0.unwrap_or_else(|| Rational::new(1, 2 * (k * (k - 1)) as i64));
    let excess = forbidden.difference(a)?;
    let mut report = ModelReport {
        p: space.p,
        n: space.n,
        k,
        r,
        delta,
        eps0,
        a_size: a.len(),
        x_size: forbidden.len(),
        eta: if a.is_empty() { f64::INFINITY } else { excess.len() as f64 / a.len() as f64 },
        witness: crate::solvers::summing_witness(a, forbidden, k)?,
        dense_cosets: None,
        trace: None,
        final_atoms: 0,
        walk: Vec::new(),
        dilates: Vec::new(),
        threshold: 0.0,
        alternative: ModelAlternative::NotSumming,
        rechecks_ok: true,
    };
    if report.witness.is_some() && opts.stop_on_witness {
        return Ok(report);
    }
    let (dense, s) = densest_cosets(&space, a, opts.codim, opts.subspace_limit)?;
    let nu0 = dense.density_on_s.clone();
    let start = WeightedCover::uniform_cosets(space.clone(), &dense.cosets, &dense.subspace)?;
    let (cover, trace) = uniformize(&start, a, &s, delta, r)?;
    let mut rechecks = cover_check(&start, &s) && cover_check(&cover, &s) && trace.all_checks_hold();
    for j in 0..r {
        rechecks &= unif_step(&super::cover::cover_dilate(&cover, j)?, a, delta)?.certified;
    }

    let e0 = big_of(eps0);
    let half = BigRational::new(1.into(), 2.into());
    let d2 = big_of(delta) * big_of(delta);
    let mut counting_fired = false;
    for (idx, atom) in cover.atoms.iter().enumerate() {
        let at = |s: u32| space.scale_code(atom.z, pow2_mod(s, space.p));
        let density = |s: u32, set: &GroupSet| coset_density(&space, &atom.subspace, at(s), set);
        let m0 = density(0, a)?;
        let mut uniform = true;
        for s in 0..r {
            let u = super::cover::atom_uniformity(&space, &atom.subspace, at(s), a)?;
            uniform &= u.deviation_sq <= d2;
        }
        let mut light = true;
        for s in 1..=r {
            light &= density(s, &excess)? <= &e0 * &half;
        }
        let mut steps = Vec::new();
        for s in 0..r {
            let ms = density(s, a)?;
            let mx = density(s + 1, forbidden)?;
            let mex = density(s + 1, &excess)?;
            let mut step = WalkStep {
                s,
                branch: Branch::Propagated,
                density: big_f64(&ms),
                next_x_mass: big_f64(&mx),
                next_excess_mass: big_f64(&mex),
                ct: None,
                collision_bound: None,
                collision_consistent: None,
            };
            if mx <= e0 {
                counting_fired = true;
                step.branch = Branch::Counting;
                let size = atom.subspace.size();
                let exact_ok = (size as u128).checked_pow(k as u32).is_some_and(|t| t <= EXACT_TUPLE_BUDGET);
                let kk = BigInt::from(k * (k - 1) / 2);
                let collision = BigRational::from_integer(kk) * num::pow::pow(ms.clone(), k - 1) / BigRational::from_integer(BigInt::from(size));
                step.collision_bound = Some(big_f64(&collision));
                if exact_ok {
                    let ct = ct_bound_check(&space, at(s), &atom.subspace, a, forbidden, k, eps0)?;
                    if report.witness.is_none() {
                        let q = count_tuples(&space, at(s), &atom.subspace, a, forbidden, k, CountMode::Exact)?;
                        let ok = q.exact.is_some_and(|q| q <= collision);
                        rechecks &= ok;
                        step.collision_consistent = Some(ok);
                    }
                    rechecks &= ct.is_ok();
                    step.ct = Some(ct);
                } else {
                    let mode = CountMode::MonteCarlo { samples: 100_000, seed: opts.seed ^ idx as u64 };
                    let q = count_tuples(&space, at(s), &atom.subspace, a, forbidden, k, mode)?;
                    step.collision_consistent = Some(q.value <= big_f64(&collision) + 3.0 * q.std_err);
                }
                steps.push(step);
                break;
            }
            steps.push(step);
        }
        report.walk.push(AtomWalk {
            atom: idx,
            weight: big_f64(&atom.weight),
            dim: atom.subspace.dim(),
            dense: m0 > &nu0 * &half,
            uniform,
            light,
            steps,
        });
    }

    let lower = if nu0 < e0 { nu0.clone() } else { e0.clone() };
    let threshold = &lower * &half * &nu0 / BigRational::from_integer(8.into());
    let mut dense_dilates = true;
    for j in 1..=r {
        let dil = s.dilate(pow2_mod(j, space.p))?;
        let hit = dil.intersection_len(a);
        let ratio = big_ratio(hit as u64, s.len() as u64);
        let lam = pow2_mod(j, space.p);
        let dens = cover.densities(a, lam)?;
        let expected = cover.atoms.iter().zip(&dens).fold(BigRational::zero(), |acc, (at, d)| acc + &at.weight * d);
        let matches_cover = expected == ratio;
        rechecks &= matches_cover;
        dense_dilates &= ratio >= threshold;
        report.dilates.push(DilateRow { j, intersection: hit, ratio: big_f64(&ratio), matches_cover });
    }
    report.threshold = big_f64(&threshold);
    report.alternative = if report.witness.is_some() {
        ModelAlternative::NotSumming
    } else if dense_dilates {
        ModelAlternative::DenseDilates
    } else if counting_fired {
        ModelAlternative::SmallGroup
    } else {
        ModelAlternative::LargeExcess
    };
    report.final_atoms = cover.len();
    report.rechecks_ok = rechecks;
    report.dense_cosets = Some(dense);
    report.trace = Some(trace);
    Ok(report)
}
