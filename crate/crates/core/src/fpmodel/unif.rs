//! The energy-increment step on a weighted cover and its iteration over the
//! dilates `2^j z`, `0 <= j < r`.

use num::{BigInt, BigRational, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::cover::{atom_uniformity, cover_dilate, cover_undilate, AtomUniformity, Atom, WeightedCover};
use super::linalg::{FieldSpace, Subspace};
use super::{big_f64, ser_big};
use crate::error::{invalid, Result};
use crate::fourier::{DenseFunction, COEFF_TOLERANCE};
use crate::group::AmbientGroup;
use crate::sets::GroupSet;
use crate::Rational;

pub(crate) fn big_of(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomVerdict {
    #[serde(flatten)]
    pub uniformity: AtomUniformity,
    /// `deviation <= delta`, decided exactly on the squares.
    pub uniform: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinedAtom {
    pub atom: usize,
    /// `|Gamma|`, characters of `U` with `|1_{A'}^(gamma)| >= delta / 2`.
    pub gamma: usize,
    pub codim_drop: usize,
    /// `E_{x'}[m_{x'+U'}(A)^2] - m_{x+U}(A)^2`.
    #[serde(serialize_with = "ser_big")]
    pub gain: BigRational,
    /// `gain > delta^2 / 2`, re-checked exactly.
    pub gain_ok: bool,
    /// Some `|coefficient|` fell within tolerance of `delta / 2`.
    pub borderline: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub cover: WeightedCover,
    pub refined: Vec<RefinedAtom>,
    #[serde(serialize_with = "ser_big")]
    pub energy_before: BigRational,
    #[serde(serialize_with = "ser_big")]
    pub energy_after: BigRational,
}

impl Refinement {
    pub fn increase(&self) -> BigRational {
        &self.energy_after - &self.energy_before
    }

    pub fn max_gamma(&self) -> usize {
        self.refined.iter().map(|r| r.gamma).max().unwrap_or(0)
    }

    pub fn max_codim_drop(&self) -> usize {
        self.refined.iter().map(|r| r.codim_drop).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnifStep {
    #[serde(serialize_with = "super::ser_rational")]
    pub delta: Rational,
    pub atoms: Vec<AtomVerdict>,
    /// `P(deviation > delta)`.
    #[serde(serialize_with = "ser_big")]
    pub nonuniform_mass: BigRational,
    /// Case (1): the non-uniform mass is at most `delta`.
    pub certified: bool,
    pub refinement: Option<Refinement>,
    pub tolerance_dependent: bool,
}

/// Characters `gamma` of `U` (as coordinate vectors) with `|1_{A'}^(gamma)| >= delta/2`
/// under the probability normalisation on `U`, and whether any was borderline.
fn large_spectrum(space: &FieldSpace, u: &Subspace, x: i64, a: &GroupSet, half_delta: f64) -> Result<(Vec<Vec<u64>>, bool)> {
    let d = u.dim();
    if d == 0 {
        return Ok((Vec::new(), false));
    }
    let local = FieldSpace { p: space.p, n: d };
    let g = AmbientGroup::vector_space(space.p, d)?;
    let xv = space.vec_of(x);
    let mut codes = Vec::new();
    for c in a.iter() {
        let diff: Vec<u64> = space.vec_of(c).iter().zip(&xv).map(|(&ai, &xi)| (ai + space.p - xi) % space.p).collect();
        if let Some(coords) = u.coordinates(&diff) {
            codes.push(local.code_of(&coords));
        }
    }
    let ind = DenseFunction::indicator(&GroupSet::new(g, codes)?)?;
    let size = u.size() as f64;
    let mut gamma = Vec::new();
    let mut borderline = false;
    for (t, v) in ind.dft().values().iter().enumerate() {
        let mag = v.norm() / size;
        if (mag - half_delta).abs() <= COEFF_TOLERANCE {
            borderline = true;
        }
        // Borderline characters are kept: extra kernels only shrink U'.
        if mag >= half_delta - COEFF_TOLERANCE {
            gamma.push(local.vec_of(t as i64));
        }
    }
    Ok((gamma, borderline))
}

fn refine_atom(
    space: &FieldSpace,
    atom: &Atom,
    a: &GroupSet,
    alpha: &BigRational,
    delta: Rational,
) -> Result<(Vec<Atom>, RefinedAtom, usize)> {
    let half = crate::fourier::rational_f64(delta) / 2.0;
    let (gamma, borderline) = large_spectrum(space, &atom.subspace, atom.z, a, half)?;
    let u2 = atom.subspace.coordinate_kernel(&gamma)?;
    let mut reps: Vec<Vec<u64>> = atom
        .subspace
        .coset_codes(&space.vec_of(atom.z))?
        .into_iter()
        .map(|c| u2.reduce(&space.vec_of(c)))
        .collect();
    reps.sort();
    reps.dedup();
    let w = &atom.weight / BigRational::from_integer(BigInt::from(reps.len()));
    let mut sq = BigRational::zero();
    let mut atoms = Vec::with_capacity(reps.len());
    for r in &reps {
        let z = space.code_of(r);
        let m = super::cover::coset_density(space, &u2, z, a)?;
        sq += &m * &m;
        atoms.push(Atom { weight: w.clone(), z, subspace: u2.clone() });
    }
    let gain = sq / BigRational::from_integer(BigInt::from(reps.len())) - alpha * alpha;
    let d = big_of(delta);
    let gain_ok = gain > &d * &d / BigRational::from_integer(2.into());
    let info = RefinedAtom {
        atom: 0,
        gamma: gamma.len(),
        codim_drop: atom.subspace.dim() - u2.dim(),
        gain,
        gain_ok,
        borderline,
    };
    Ok((atoms, info, reps.len()))
}

/// One application of the increment lemma: either certify that the mass of
/// atoms with deviation above `delta` is at most `delta`, or replace every
/// such atom by the cosets of `U' = ∩_{gamma in Gamma} ker gamma`.
pub fn unif_step(cover: &WeightedCover, a: &GroupSet, delta: Rational) -> Result<UnifStep> {
    if delta <= Rational::zero() {
        return Err(invalid(format!("delta = {delta} must be positive")));
    }
    cover.space.ambient().ensure_same(a.ambient())?;
    let space = &cover.space;
    let d = big_of(delta);
    let d2 = &d * &d;
    let atoms: Vec<AtomVerdict> = cover
        .atoms
        .par_iter()
        .map(|at| {
            let uniformity = atom_uniformity(space, &at.subspace, at.z, a)?;
            let uniform = uniformity.deviation_sq <= d2;
            Ok(AtomVerdict { uniformity, uniform })
        })
        .collect::<Result<_>>()?;
    let nonuniform_mass = cover
        .atoms
        .iter()
        .zip(&atoms)
        .filter(|(_, v)| !v.uniform)
        .fold(BigRational::zero(), |acc, (at, _)| acc + &at.weight);
    let certified = nonuniform_mass <= d;
    if certified {
        return Ok(UnifStep { delta, atoms, nonuniform_mass, certified, refinement: None, tolerance_dependent: false });
    }
    let pieces: Vec<Option<(Vec<Atom>, RefinedAtom, usize)>> = cover
        .atoms
        .par_iter()
        .zip(&atoms)
        .map(|(at, v)| if v.uniform { Ok(None) } else { refine_atom(space, at, a, &v.uniformity.alpha, delta).map(Some) })
        .collect::<Result<_>>()?;
    let mut new_atoms = Vec::new();
    let mut refined = Vec::new();
    for (i, (at, piece)) in cover.atoms.iter().zip(pieces).enumerate() {
        match piece {
            None => new_atoms.push(at.clone()),
            Some((children, mut info, _)) => {
                info.atom = i;
                new_atoms.extend(children);
                refined.push(info);
            }
        }
    }
    let energy = |c: &WeightedCover, vals: &[BigRational]| -> BigRational {
        c.atoms.iter().zip(vals).fold(BigRational::zero(), |acc, (at, m)| acc + &at.weight * m * m)
    };
    let before_alphas: Vec<BigRational> = atoms.iter().map(|v| v.uniformity.alpha.clone()).collect();
    let energy_before = energy(cover, &before_alphas);
    let next = WeightedCover::new(space.clone(), new_atoms)?;
    let energy_after = energy(&next, &next.densities(a, 1)?);
    let tolerance_dependent = refined.iter().any(|r| r.borderline);
    Ok(UnifStep {
        delta,
        atoms,
        nonuniform_mass,
        certified,
        refinement: Some(Refinement { cover: next, refined, energy_before, energy_after }),
        tolerance_dependent,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// The dilate `2^j z` whose certificate failed.
    pub j: u32,
    /// Indices of the atoms `omega` that were split.
    pub triggering_atoms: Vec<usize>,
    pub max_gamma: usize,
    pub max_codim_drop: usize,
    #[serde(serialize_with = "ser_big")]
    pub nonuniform_mass: BigRational,
    #[serde(serialize_with = "ser_big")]
    pub functional_before: BigRational,
    #[serde(serialize_with = "ser_big")]
    pub functional_after: BigRational,
    /// Increase of the functional is at least `delta^3 / 2`.
    pub increase_ok: bool,
    /// `|Gamma| <= 4 / delta^2` for every split atom.
    pub gamma_ok: bool,
    /// Exact `cover_check` against `S` after the step.
    pub cover_ok: bool,
    pub atoms_after: usize,
    pub min_dim_after: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationTrace {
    pub steps: Vec<StepRecord>,
    /// `ceil(2 (r + 1) / delta^3)`.
    pub step_cap: u64,
    pub cap_exceeded: bool,
    /// Final per-`j` certificates: non-uniform mass of `(2^j z, Z)`.
    pub certificates: Vec<(u32, f64)>,
    pub min_dim_initial: usize,
    pub min_dim_final: usize,
    /// Some atom collapsed to the zero subspace.
    pub degenerate: bool,
    pub tolerance_dependent: bool,
}

impl IterationTrace {
    pub fn all_checks_hold(&self) -> bool {
        !self.cap_exceeded && self.steps.iter().all(|s| s.increase_ok && s.gamma_ok && s.cover_ok)
    }
}

pub(crate) fn step_cap(delta: Rational, r: u32) -> u64 {
    let d = big_of(delta);
    let cap = BigRational::from_integer(BigInt::from(2 * (r as u64 + 1))) / (&d * &d * &d);
    cap.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Round-robin increments over `j in [0, r)` until every dilate is certified.
/// The cover is checked exactly against `s` after every refinement.
pub fn uniformize(cover: &WeightedCover, a: &GroupSet, s: &GroupSet, delta: Rational, r: u32) -> Result<(WeightedCover, IterationTrace)> {
    if cover.space.p == 2 {
        return Err(crate::error::Error::Unsupported("uniformize needs odd characteristic".into()));
    }
    let cap = step_cap(delta, r);
    let d = big_of(delta);
    let min_increase = &d * &d * &d / BigRational::from_integer(2.into());
    let gamma_limit = BigRational::from_integer(4.into()) / (&d * &d);
    let mut current = cover.clone();
    let mut trace = IterationTrace {
        steps: Vec::new(),
        step_cap: cap,
        cap_exceeded: false,
        certificates: Vec::new(),
        min_dim_initial: cover.min_dim(),
        min_dim_final: cover.min_dim(),
        degenerate: false,
        tolerance_dependent: false,
    };
    let mut certs: Vec<Option<f64>> = vec![None; r as usize];
    let mut clean = 0u32;
    let mut j = 0u32;
    while clean < r {
        let dilated = cover_dilate(&current, j)?;
        let step = unif_step(&dilated, a, delta)?;
        trace.tolerance_dependent |= step.tolerance_dependent;
        match step.refinement {
            None => {
                certs[j as usize] = Some(big_f64(&step.nonuniform_mass));
                clean += 1;
            }
            Some(refinement) => {
                if trace.steps.len() as u64 >= cap {
                    trace.cap_exceeded = true;
                    break;
                }
                let before = current.energy_functional(a, r)?;
                let next = cover_undilate(&refinement.cover, j)?;
                let after = next.energy_functional(a, r)?;
                let gamma_ok = refinement
                    .refined
                    .iter()
                    .all(|ra| BigRational::from_integer(BigInt::from(ra.gamma)) <= gamma_limit);
                trace.steps.push(StepRecord {
                    step: trace.steps.len(),
                    j,
                    triggering_atoms: refinement.refined.iter().map(|ra| ra.atom).collect(),
                    max_gamma: refinement.max_gamma(),
                    max_codim_drop: refinement.max_codim_drop(),
                    nonuniform_mass: step.nonuniform_mass.clone(),
                    increase_ok: &after - &before >= min_increase,
                    functional_before: before,
                    functional_after: after,
                    gamma_ok,
                    cover_ok: super::cover::cover_check(&next, s),
                    atoms_after: next.len(),
                    min_dim_after: next.min_dim(),
                });
                current = next;
                certs.iter_mut().for_each(|c| *c = None);
                clean = 0;
            }
        }
        if r > 0 {
            j = (j + 1) % r;
        }
    }
    trace.certificates = certs.iter().enumerate().filter_map(|(j, c)| c.map(|m| (j as u32, m))).collect();
    trace.min_dim_final = current.min_dim();
    trace.degenerate = current.atoms.iter().any(|at| at.subspace.dim() == 0) && !trace.steps.is_empty();
    Ok((current, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpmodel::cover::{big_ratio, cover_check};
    use num::One;

    #[test]
    fn aligned_subspace_is_uniform() {
        let v = FieldSpace::new(3, 3).unwrap();
        let u = Subspace::span(&v, &[vec![1, 0, 0], vec![0, 1, 0]]).unwrap();
        let x = v.code_of(&[0, 0, 1]);
        let a = GroupSet::new(v.ambient(), u.coset_codes(&v.vec_of(x)).unwrap()).unwrap();
        let c = WeightedCover::coset(v, x, u).unwrap();
        let step = unif_step(&c, &a, Rational::new(1, 10)).unwrap();
        assert!(step.certified);
        assert!(step.atoms[0].uniformity.deviation_sq.is_zero());
    }

    #[test]
    fn hyperplane_inside_full_space() {
        // A = ker(lambda) with lambda = (1, 2) in F_3^2; deviation^2 = 2/81 > delta^2.
        let v = FieldSpace::new(3, 2).unwrap();
        let ker = Subspace::annihilator(&v, &[vec![1, 2]]).unwrap();
        let a = GroupSet::new(v.ambient(), ker.coset_codes(&[0, 0]).unwrap()).unwrap();
        let full = Subspace::full(&v);
        let c = WeightedCover::coset(v.clone(), 0, full).unwrap();
        let step = unif_step(&c, &a, Rational::new(1, 10)).unwrap();
        assert!(!step.certified);
        let refinement = step.refinement.unwrap();
        // Gamma = {0, lambda, 2 lambda}.
        assert_eq!(refinement.refined[0].gamma, 3);
        assert_eq!(refinement.refined[0].codim_drop, 1);
        for at in &refinement.cover.atoms {
            assert_eq!(at.subspace, ker);
            let m = crate::fpmodel::cover::coset_density(&v, &at.subspace, at.z, &a).unwrap();
            assert!(m.is_zero() || m.is_one());
        }
        let s = GroupSet::full(v.ambient()).unwrap();
        assert!(cover_check(&refinement.cover, &s));
        // 1/3 - 1/9 = 2/9 > delta^2 / 2.
        assert_eq!(refinement.increase(), big_ratio(2, 9));
    }

    #[test]
    fn large_delta_is_vacuous() {
        let v = FieldSpace::new(3, 2).unwrap();
        let a = GroupSet::new(v.ambient(), [0, 1, 5]).unwrap();
        let c = WeightedCover::coset(v.clone(), 0, Subspace::full(&v)).unwrap();
        assert!(unif_step(&c, &a, Rational::from_integer(2)).unwrap().certified);
        assert!(unif_step(&c, &a, Rational::zero()).is_err());
    }

    #[test]
    fn zero_rounds_leave_the_cover_alone() {
        let v = FieldSpace::new(3, 2).unwrap();
        let a = GroupSet::new(v.ambient(), [0, 1, 5]).unwrap();
        let s = GroupSet::full(v.ambient()).unwrap();
        let c = WeightedCover::coset(v.clone(), 0, Subspace::full(&v)).unwrap();
        let (out, trace) = uniformize(&c, &a, &s, Rational::new(3, 10), 0).unwrap();
        assert_eq!(out, c);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn random_half_density_terminates() {
        use rand::Rng;
        let v = FieldSpace::new(3, 5).unwrap();
        let mut rng = crate::constructions::rng(7);
        let a = GroupSet::new(v.ambient(), (0..243).filter(|_| rng.gen_bool(0.5))).unwrap();
        let s = GroupSet::full(v.ambient()).unwrap();
        let c = WeightedCover::coset(v.clone(), 0, Subspace::full(&v)).unwrap();
        let delta = Rational::new(3, 10);
        let (out, trace) = uniformize(&c, &a, &s, delta, 2).unwrap();
        assert!(trace.all_checks_hold(), "{trace:?}");
        assert!((trace.steps.len() as u64) <= step_cap(delta, 2));
        assert_eq!(step_cap(delta, 2), 223);
        assert!(cover_check(&out, &s));
        for j in 0..2 {
            assert!(unif_step(&cover_dilate(&out, j).unwrap(), &a, delta).unwrap().certified);
        }
    }
}
