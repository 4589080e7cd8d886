//! Closed pairs `(Z, W)`: `Z^- + W ⊆ Z`, `Z + W ⊆ Z^+` and
//! `|Z^+| <= (1 + tau) |Z^-|`, and the pigeonhole search producing them.

use num::{BigInt, BigRational, One, Zero};
use serde::Serialize;

use super::System;
use crate::error::{invalid, Error, Result};
use crate::sets::GroupSet;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosedPairWitness {
    pub z: GroupSet,
    pub w: GroupSet,
    pub z_minus: GroupSet,
    pub z_plus: GroupSet,
    #[serde(serialize_with = "ser_rational")]
    pub tau: Rational,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl ClosedPairWitness {
    pub fn new(z: GroupSet, w: GroupSet, z_minus: GroupSet, z_plus: GroupSet, tau: Rational) -> Result<Self> {
        let wit = ClosedPairWitness { z, w, z_minus, z_plus, tau };
        wit.validate()?;
        Ok(wit)
    }

    /// `(H, H)` with `Z^- = Z^+ = H` and `tau = 0`.
    pub fn subgroup(h: &GroupSet) -> Result<Self> {
        super::subgroup_system(h, 2)?;
        Self::new(h.clone(), h.clone(), h.clone(), h.clone(), Rational::zero())
    }

    /// Independent check of every defining condition.
    pub fn validate(&self) -> Result<()> {
        let g = self.z.ambient();
        for (name, s) in [("Z", &self.z), ("W", &self.w), ("Z-", &self.z_minus), ("Z+", &self.z_plus)] {
            g.ensure_same(s.ambient())?;
            if !s.is_symmetric_neighbourhood() {
                return Err(invalid(format!("{name} is not a symmetric neighbourhood of 0")));
            }
        }
        if self.tau < Rational::zero() {
            return Err(invalid("tau must be non-negative"));
        }
        if !self.z_minus.sumset(&self.w)?.is_subset(&self.z) {
            return Err(invalid("Z- + W is not contained in Z"));
        }
        if !self.z.sumset(&self.w)?.is_subset(&self.z_plus) {
            return Err(invalid("Z + W is not contained in Z+"));
        }
        let lhs = Rational::from_integer(self.z_plus.len() as i64);
        if lhs > (Rational::one() + self.tau) * Rational::from_integer(self.z_minus.len() as i64) {
            return Err(invalid(format!(
                "|Z+| = {} exceeds (1 + {}) |Z-| = (1 + {}) {}",
                self.z_plus.len(),
                self.tau,
                self.tau,
                self.z_minus.len()
            )));
        }
        Ok(())
    }

    /// `||tau_w(m_Z) - m_Z|| = |Z Δ (Z + w)| / |Z|`.
    pub fn translation_distance(&self, w: i64) -> Result<Rational> {
        let shifted = self.z.translate(w)?;
        let common = self.z.intersection_len(&shifted);
        let n = self.z.len() as i64;
        Ok(Rational::new(2 * (n - common as i64), n))
    }

    /// Largest translation distance over `W`; at most `tau` for a valid witness.
    pub fn max_translation_distance(&self) -> Result<Rational> {
        let mut worst = Rational::zero();
        for w in self.w.iter() {
            worst = worst.max(self.translation_distance(w)?);
        }
        Ok(worst)
    }

    /// Same `Z` with a smaller `W' ⊆ W`.
    pub fn restrict(&self, w: &GroupSet) -> Result<Self> {
        if !w.is_subset(&self.w) {
            return Err(invalid("W' must be a subset of W"));
        }
        Self::new(self.z.clone(), w.clone(), self.z_minus.clone(), self.z_plus.clone(), self.tau)
    }

    /// All four sets multiplied by `2^m`; closedness survives when the
    /// ambient group has no 2-torsion.
    pub fn multiple(&self, m: u32) -> Result<Self> {
        let f = 1i64.checked_shl(m).filter(|&f| f > 0).ok_or(Error::Overflow("2^m"))?;
        Self::new(self.z.dilate(f)?, self.w.dilate(f)?, self.z_minus.dilate(f)?, self.z_plus.dilate(f)?, self.tau)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Regularized {
    pub witness: ClosedPairWitness,
    /// `W = B_m`.
    pub m: usize,
    /// `Z_0 = Z + (2j + 1) B_m`.
    pub j: usize,
    /// `|Z + B_0| / |Z|`.
    #[serde(serialize_with = "ser_rational")]
    pub doubling: Rational,
    /// `max(1, ceil(log2(ln K / ln(1 + tau))) + 1)`.
    pub m_bound: usize,
}

fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn m_bound(k: f64, tau: f64) -> usize {
    if k <= 1.0 {
        return 1;
    }
    let v = (k.ln() / tau.ln_1p()).log2().ceil() + 1.0;
    if v.is_finite() && v >= 1.0 {
        v as usize
    } else {
        1
    }
}

/// Pigeonholes the chain `Z ⊆ Z + 2B_m ⊆ Z + 4B_m ⊆ ... ⊆ Z + B_0` for a
/// step with ratio at most `1 + tau`.
pub fn regularize(z: &GroupSet, b: &System, tau: Rational) -> Result<Regularized> {
    if tau <= Rational::zero() || tau > Rational::one() {
        return Err(invalid(format!("tau = {tau} must lie in (0, 1]")));
    }
    z.ambient().ensure_same(b.ambient())?;
    if !z.is_symmetric_neighbourhood() {
        return Err(invalid("Z must be a symmetric neighbourhood of 0"));
    }
    let grown = z.sumset(b.level(0))?;
    let doubling = Rational::new(grown.len() as i64, z.len() as i64);
    let k_big = big(doubling);
    let base = BigRational::one() + big(tau);
    let mut m = 1usize;
    loop {
        let exp = 1u32 << (m - 1).min(30);
        if num::pow::pow(base.clone(), exp as usize) >= k_big {
            break;
        }
        m += 1;
        if m > 31 {
            return Err(Error::Range("tau too small for the doubling of Z".into()));
        }
    }
    if m > b.depth() {
        return Err(Error::Range(format!("regularizing needs system depth at least {m}, system has {}", b.depth())));
    }
    let bm = b.level(m);
    let steps = 1usize << (m - 1);
    let mut cur = z.clone();
    let limit = Rational::one() + tau;
    for j in 0..steps {
        let mid = cur.sumset(bm)?;
        let next = mid.sumset(bm)?;
        if Rational::from_integer(next.len() as i64) <= limit * Rational::from_integer(cur.len() as i64) {
            let witness = ClosedPairWitness::new(mid, bm.clone(), cur, next, tau)?;
            let m_bound = m_bound(*doubling.numer() as f64 / *doubling.denom() as f64, crate::fourier::rational_f64(tau));
            return Ok(Regularized { witness, m, j, doubling, m_bound });
        }
        cur = next;
    }
    Err(invalid("no regular step found; the system nesting must be broken"))
}

/// Regularizes `Z = B_1` against `2^-1 B`, so that `B_1 ⊆ Z_0 ⊆ B_0` and
/// `W = B_m` in the original indexing.
pub fn closed_from_system(b: &System, tau: Rational) -> Result<Regularized> {
    if b.depth() < 3 {
        return Err(Error::Range("closed_from_system needs depth at least 3".into()));
    }
    let shifted = System::from_parts(b.levels()[1..].to_vec(), b.cover_bound().clone());
    let mut r = regularize(b.level(1), &shifted, tau)?;
    r.m += 1;
    Ok(r)
}
