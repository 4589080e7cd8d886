//! Weighted covers: finitely many atoms `(weight, z, Z)` with
//! `sum weight * m_{z+Z} = m_S`.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::linalg::{inv_mod, FieldSpace, Subspace};
use super::ser_big;
use crate::error::{invalid, Error, Result};
use crate::sets::GroupSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Atom {
    #[serde(serialize_with = "ser_big")]
    pub weight: BigRational,
    /// Translate, as a code of `F_p^n`.
    pub z: i64,
    pub subspace: Subspace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedCover {
    pub space: FieldSpace,
    pub atoms: Vec<Atom>,
}

pub(crate) fn big_ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `|A ∩ (x + U)|`, iterating whichever side is smaller.
pub(crate) fn coset_count(space: &FieldSpace, u: &Subspace, x: i64, a: &GroupSet) -> Result<u64> {
    if (a.len() as u64) < u.size() {
        let xr = u.reduce(&space.vec_of(x));
        Ok(a.iter().filter(|&c| u.reduce(&space.vec_of(c)) == xr).count() as u64)
    } else {
        Ok(u.coset_codes(&space.vec_of(x))?.into_iter().filter(|&c| a.contains(c)).count() as u64)
    }
}

/// `m_{x+U}(A)` exactly.
pub fn coset_density(space: &FieldSpace, u: &Subspace, x: i64, a: &GroupSet) -> Result<BigRational> {
    Ok(big_ratio(coset_count(space, u, x, a)?, u.size()))
}

/// `alpha = m_{x+U}(A)` and the squared deviation
/// `|| 1_{A∩(x+U)} * (1_A dm_{x+U}) - alpha^2 ||^2` in `L2(m_{2x+U})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomUniformity {
    #[serde(serialize_with = "ser_big")]
    pub alpha: BigRational,
    #[serde(serialize_with = "ser_big")]
    pub deviation_sq: BigRational,
}

pub fn atom_uniformity(space: &FieldSpace, u: &Subspace, x: i64, a: &GroupSet) -> Result<AtomUniformity> {
    let xv = space.vec_of(x);
    let d = u.dim();
    let size = u.size();
    // Work in U-coordinates: A' = (A - x) ∩ U.
    let local = FieldSpace { p: space.p, n: d.max(1) };
    let mut members: Vec<usize> = Vec::new();
    for c in a.iter() {
        let diff: Vec<u64> = space.vec_of(c).iter().zip(&xv).map(|(&ai, &xi)| (ai + space.p - xi) % space.p).collect();
        if let Some(coords) = u.coordinates(&diff) {
            members.push(if d == 0 { 0 } else { local.code_of(&coords) as usize });
        }
    }
    let m = members.len() as u64;
    // counts[u] = #{a in A' : u - a in A'}
    let mut counts = vec![0u64; size as usize];
    if d > 0 {
        let vecs: Vec<Vec<u64>> = members.iter().map(|&i| local.vec_of(i as i64)).collect();
        for av in &vecs {
            for bv in &vecs {
                counts[local.code_of(&local.add(av, bv)) as usize] += 1;
            }
        }
    } else {
        counts[0] = m * m;
    }
    let n = size as i128;
    let m2 = (m * m) as i128;
    let mut acc = BigInt::zero();
    for &c in &counts {
        let t = c as i128 * n - m2;
        acc += BigInt::from(t * t);
    }
    let denom = BigInt::from(n).pow(5);
    Ok(AtomUniformity { alpha: big_ratio(m, size), deviation_sq: BigRational::new(acc, denom) })
}

impl WeightedCover {
    pub fn new(space: FieldSpace, atoms: Vec<Atom>) -> Result<Self> {
        let cover = WeightedCover { space, atoms };
        cover.validate()?;
        Ok(cover)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(invalid("a weighted cover needs at least one atom"));
        }
        let mut total = BigRational::zero();
        for atom in &self.atoms {
            if atom.weight <= BigRational::zero() {
                return Err(invalid("atom weights must be positive"));
            }
            if atom.subspace.p != self.space.p || atom.subspace.n != self.space.n {
                return Err(invalid("atom subspace lives in a different space"));
            }
            if atom.z < 0 || atom.z as u64 >= self.space.order() {
                return Err(invalid(format!("{} is not an element of F_{}^{}", atom.z, self.space.p, self.space.n)));
            }
            total += &atom.weight;
        }
        if !total.is_one() {
            return Err(invalid(format!("atom weights sum to {total}, not 1")));
        }
        Ok(())
    }

    /// `{(1/|S|, s, {0}) : s in S}`.
    pub fn points(space: FieldSpace, s: &GroupSet) -> Result<Self> {
        let w = big_ratio(1, s.len() as u64);
        let zero = Subspace::zero(&space);
        let atoms = s.iter().map(|z| Atom { weight: w.clone(), z, subspace: zero.clone() }).collect();
        Self::new(space, atoms)
    }

    pub fn coset(space: FieldSpace, x: i64, u: Subspace) -> Result<Self> {
        Self::new(space, vec![Atom { weight: BigRational::one(), z: x, subspace: u }])
    }

    /// Equal weights on the given cosets of `U`.
    pub fn uniform_cosets(space: FieldSpace, reps: &[i64], u: &Subspace) -> Result<Self> {
        if reps.is_empty() {
            return Err(invalid("no cosets given"));
        }
        let w = big_ratio(1, reps.len() as u64);
        let atoms = reps.iter().map(|&z| Atom { weight: w.clone(), z, subspace: u.clone() }).collect();
        Self::new(space, atoms)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_dim(&self) -> usize {
        self.atoms.iter().map(|a| a.subspace.dim()).min().unwrap_or(0)
    }

    /// `E[m_{z+Z}]` as exact point masses.
    pub fn measure(&self) -> Result<BTreeMap<i64, BigRational>> {
        let mut out: BTreeMap<i64, BigRational> = BTreeMap::new();
        for atom in &self.atoms {
            let mass = &atom.weight / BigRational::from_integer(BigInt::from(atom.subspace.size()));
            for c in atom.subspace.coset_codes(&self.space.vec_of(atom.z))? {
                *out.entry(c).or_insert_with(BigRational::zero) += &mass;
            }
        }
        Ok(out)
    }

    /// Every atom multiplied by the scalar `lambda`, which must be a unit.
    pub fn scale(&self, lambda: i64) -> Result<Self> {
        if lambda.rem_euclid(self.space.p as i64) == 0 {
            return Err(invalid("scaling by a multiple of p collapses the cover"));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom { weight: a.weight.clone(), z: self.space.scale_code(a.z, lambda), subspace: a.subspace.clone() })
            .collect();
        Ok(WeightedCover { space: self.space.clone(), atoms })
    }

    /// Atoms with the same coset merged, weights added; order of first occurrence.
    pub fn merged(&self) -> Self {
        let mut index: BTreeMap<(Vec<Vec<u64>>, Vec<u64>), usize> = BTreeMap::new();
        let mut atoms: Vec<Atom> = Vec::new();
        for a in &self.atoms {
            let rep = a.subspace.reduce(&self.space.vec_of(a.z));
            let key = (a.subspace.basis.clone(), rep.clone());
            match index.get(&key) {
                Some(&i) => atoms[i].weight += &a.weight,
                None => {
                    index.insert(key, atoms.len());
                    atoms.push(Atom { weight: a.weight.clone(), z: self.space.code_of(&rep), subspace: a.subspace.clone() });
                }
            }
        }
        WeightedCover { space: self.space.clone(), atoms }
    }

    /// `m_{lambda z + Z}(A)` for every atom.
    pub fn densities(&self, a: &GroupSet, lambda: i64) -> Result<Vec<BigRational>> {
        self.atoms
            .par_iter()
            .map(|atom| coset_density(&self.space, &atom.subspace, self.space.scale_code(atom.z, lambda), a))
            .collect()
    }

    /// `E[m_{2^j z + Z}(A)^2]`.
    pub fn energy(&self, a: &GroupSet, j: u32) -> Result<BigRational> {
        let lambda = pow2_mod(j, self.space.p);
        let dens = self.densities(a, lambda)?;
        Ok(self.atoms.iter().zip(dens).fold(BigRational::zero(), |acc, (at, d)| acc + &at.weight * &d * &d))
    }

    /// `sum_{j < r} E[m_{2^j z + Z}(A)^2]`.
    pub fn energy_functional(&self, a: &GroupSet, r: u32) -> Result<BigRational> {
        (0..r).try_fold(BigRational::zero(), |acc, j| Ok(acc + self.energy(a, j)?))
    }
}

pub(crate) fn pow2_mod(j: u32, p: u64) -> i64 {
    (0..j).fold(1u64, |acc, _| acc * 2 % p) as i64
}

/// Exact test of `E[m_{z+Z}] = m_S`.
pub fn cover_check(cover: &WeightedCover, s: &GroupSet) -> bool {
    if cover.validate().is_err() || s.is_empty() || s.ambient() != &cover.space.ambient() {
        return false;
    }
    let Ok(measure) = cover.measure() else { return false };
    let target = big_ratio(1, s.len() as u64);
    measure.len() == s.len() && measure.iter().all(|(c, m)| s.contains(*c) && *m == target)
}

/// `(2^j z, Z)`, a weighted cover of `2^j . S`.
pub fn cover_dilate(cover: &WeightedCover, j: u32) -> Result<WeightedCover> {
    if cover.space.p == 2 {
        return Err(Error::Unsupported("dilating by 2 in characteristic 2".into()));
    }
    cover.scale(pow2_mod(j, cover.space.p))
}

/// Inverse of [`cover_dilate`].
pub(crate) fn cover_undilate(cover: &WeightedCover, j: u32) -> Result<WeightedCover> {
    let p = cover.space.p;
    cover.scale(inv_mod(pow2_mod(j, p) as u64, p) as i64)
}
