//! Ambient groups: the integers, or a finite product of cyclic groups.
//!
//! Elements of a finite group are stored as a single mixed-radix code so that
//! dense tables can be indexed directly. The first coordinate is the most
//! significant digit, which makes code order agree with lexicographic order
//! of residue vectors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest finite group accepted for dense operations.
pub const MAX_DENSE_ORDER: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AmbientGroup {
    Integers,
    FiniteAbelian(Vec<u64>),
}

/// A group element in decoded form, used at API and file boundaries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupElem {
    Int(i64),
    Residues(Vec<u64>),
}

impl fmt::Display for AmbientGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmbientGroup::Integers => write!(f, "Z"),
            AmbientGroup::FiniteAbelian(m) => {
                let parts: Vec<String> = m.iter().map(|n| format!("Z/{n}")).collect();
                write!(f, "{}", parts.join(" x "))
            }
        }
    }
}

impl AmbientGroup {
    pub fn finite(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(invalid("finite abelian group needs at least one modulus"));
        }
        if moduli.iter().any(|&n| n < 2) {
            return Err(invalid("every modulus must be at least 2"));
        }
        let mut order: u64 = 1;
        for &n in &moduli {
            order = order
                .checked_mul(n)
                .filter(|&o| o <= MAX_DENSE_ORDER)
                .ok_or_else(|| Error::Unsupported(format!("group order exceeds {MAX_DENSE_ORDER}")))?;
        }
        Ok(AmbientGroup::FiniteAbelian(moduli))
    }

    pub fn cyclic(n: u64) -> Result<Self> {
        Self::finite(vec![n])
    }

    /// `F_p^n` viewed as `(Z/p)^n`.
    pub fn vector_space(p: u64, n: usize) -> Result<Self> {
        Self::finite(vec![p; n])
    }

    pub fn is_integers(&self) -> bool {
        matches!(self, AmbientGroup::Integers)
    }

    pub fn moduli(&self) -> Option<&[u64]> {
        match self {
            AmbientGroup::Integers => None,
            AmbientGroup::FiniteAbelian(m) => Some(m),
        }
    }

    /// Group order, `None` for the integers.
    pub fn order(&self) -> Option<u64> {
        self.moduli().map(|m| m.iter().product())
    }

    pub fn rank(&self) -> usize {
        self.moduli().map_or(1, |m| m.len())
    }

    /// True when multiplication by 2 is injective (all moduli odd, or Z).
    pub fn is_two_torsion_free(&self) -> bool {
        self.moduli().is_none_or(|m| m.iter().all(|n| n % 2 == 1))
    }

    pub fn contains_code(&self, code: i64) -> bool {
        match self.order() {
            None => true,
            Some(o) => code >= 0 && (code as u64) < o,
        }
    }

    pub fn encode(&self, elem: &GroupElem) -> Result<i64> {
        match (self, elem) {
            (AmbientGroup::Integers, GroupElem::Int(v)) => Ok(*v),
            (AmbientGroup::FiniteAbelian(m), GroupElem::Residues(r)) => {
                if r.len() != m.len() {
                    return Err(invalid(format!(
                        "element has {} residues, group has rank {}",
                        r.len(),
                        m.len()
                    )));
                }
                let mut code: u64 = 0;
                for (&ri, &ni) in r.iter().zip(m) {
                    if ri >= ni {
                        return Err(invalid(format!("residue {ri} not reduced mod {ni}")));
                    }
                    code = code * ni + ri;
                }
                Ok(code as i64)
            }
            // Cyclic groups also accept plain integers, reduced.
            (AmbientGroup::FiniteAbelian(m), GroupElem::Int(v)) if m.len() == 1 => {
                Ok(v.rem_euclid(m[0] as i64))
            }
            _ => Err(invalid(format!("element {elem:?} does not belong to {self}"))),
        }
    }

    pub fn decode(&self, code: i64) -> GroupElem {
        match self {
            AmbientGroup::Integers => GroupElem::Int(code),
            AmbientGroup::FiniteAbelian(m) => GroupElem::Residues(self.residues(code, m)),
        }
    }

    fn residues(&self, code: i64, m: &[u64]) -> Vec<u64> {
        let mut c = code as u64;
        let mut out = vec![0; m.len()];
        for (slot, &n) in out.iter_mut().zip(m).rev() {
            *slot = c % n;
            c /= n;
        }
        out
    }

    /// Residue vector of a code. Panics on the integers.
    pub fn residues_of(&self, code: i64) -> Vec<u64> {
        match self {
            AmbientGroup::Integers => panic!("residues_of called on Z"),
            AmbientGroup::FiniteAbelian(m) => self.residues(code, m),
        }
    }

    pub fn code_of(&self, residues: &[u64]) -> i64 {
        let m = self.moduli().expect("code_of called on Z");
        let mut code: u64 = 0;
        for (&r, &n) in residues.iter().zip(m) {
            code = code * n + (r % n);
        }
        code as i64
    }

    pub fn zero(&self) -> i64 {
        0
    }

    pub fn add(&self, a: i64, b: i64) -> Result<i64> {
        match self {
            AmbientGroup::Integers => a.checked_add(b).ok_or(Error::Overflow("addition")),
            AmbientGroup::FiniteAbelian(m) => Ok(self.add_finite(m, a, b)),
        }
    }

    pub fn sub(&self, a: i64, b: i64) -> Result<i64> {
        let nb = self.neg(b)?;
        self.add(a, nb)
    }

    #[inline]
    fn add_finite(&self, m: &[u64], a: i64, b: i64) -> i64 {
        if m.len() == 1 {
            let n = m[0] as i64;
            let s = a + b;
            return if s >= n { s - n } else { s };
        }
        let (mut a, mut b) = (a as u64, b as u64);
        let mut out: u64 = 0;
        let mut place: u64 = 1;
        for &n in m.iter().rev() {
            let d = (a % n + b % n) % n;
            out += d * place;
            place *= n;
            a /= n;
            b /= n;
        }
        out as i64
    }

    pub fn neg(&self, a: i64) -> Result<i64> {
        match self {
            AmbientGroup::Integers => a.checked_neg().ok_or(Error::Overflow("negation")),
            AmbientGroup::FiniteAbelian(m) => {
                let r: Vec<u64> = self.residues(a, m).iter().zip(m).map(|(&r, &n)| (n - r) % n).collect();
                Ok(self.code_of(&r))
            }
        }
    }

    /// Multiplication by an integer scalar.
    pub fn scale(&self, a: i64, lambda: i64) -> Result<i64> {
        match self {
            AmbientGroup::Integers => a.checked_mul(lambda).ok_or(Error::Overflow("dilation")),
            AmbientGroup::FiniteAbelian(m) => {
                let r: Vec<u64> = self
                    .residues(a, m)
                    .iter()
                    .zip(m)
                    .map(|(&r, &n)| {
                        let l = lambda.rem_euclid(n as i64) as u128;
                        ((r as u128 * l) % n as u128) as u64
                    })
                    .collect();
                Ok(self.code_of(&r))
            }
        }
    }

    /// All element codes of a finite group, in increasing order.
    pub fn elements(&self) -> Result<Vec<i64>> {
        match self.order() {
            None => Err(Error::Unsupported("cannot enumerate Z".into())),
            Some(o) => Ok((0..o as i64).collect()),
        }
    }

    pub fn ensure_same(&self, other: &AmbientGroup) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AmbientMismatch { left: self.to_string(), right: other.to_string() })
        }
    }

    pub fn ensure_finite(&self) -> Result<&[u64]> {
        self.moduli().ok_or_else(|| Error::Unsupported("operation needs a finite group".into()))
    }
}
