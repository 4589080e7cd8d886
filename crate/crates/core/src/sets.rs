//! Finite subsets of an ambient group and their exact arithmetic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{AmbientGroup, GroupElem};
use crate::Rational;

/// A finite set in an ambient group, stored as strictly increasing codes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupSet {
    ambient: AmbientGroup,
    elems: Vec<i64>,
}

/// Serialized in the set-file layout of [`crate::io`].
impl Serialize for GroupSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::io::set_to_value(self).serialize(s)
    }
}

/// Subsets of the integers are the common case.
pub type IntSet = GroupSet;

impl GroupSet {
    /// Builds a set from raw codes; sorts, dedups and checks membership.
    pub fn new(ambient: AmbientGroup, codes: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut elems: Vec<i64> = codes.into_iter().collect();
        elems.sort_unstable();
        elems.dedup();
        if let Some(bad) = elems.iter().find(|&&c| !ambient.contains_code(c)) {
            return Err(invalid(format!("code {bad} is not an element of {ambient}")));
        }
        Ok(GroupSet { ambient, elems })
    }

    /// Caller guarantees the codes are sorted, unique and in range.
    pub(crate) fn from_sorted_unchecked(ambient: AmbientGroup, elems: Vec<i64>) -> Self {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        GroupSet { ambient, elems }
    }

    pub fn from_ints(values: impl IntoIterator<Item = i64>) -> Self {
        Self::new(AmbientGroup::Integers, values).expect("every integer belongs to Z")
    }

    pub fn from_elems(ambient: AmbientGroup, elems: &[GroupElem]) -> Result<Self> {
        let codes = elems.iter().map(|e| ambient.encode(e)).collect::<Result<Vec<_>>>()?;
        Self::new(ambient, codes)
    }

    pub fn empty(ambient: AmbientGroup) -> Self {
        GroupSet { ambient, elems: Vec::new() }
    }

    pub fn singleton(ambient: AmbientGroup, code: i64) -> Result<Self> {
        Self::new(ambient, [code])
    }

    /// The whole of a finite group.
    pub fn full(ambient: AmbientGroup) -> Result<Self> {
        let elems = ambient.elements()?;
        Ok(GroupSet { ambient, elems })
    }

    pub fn ambient(&self) -> &AmbientGroup {
        &self.ambient
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn codes(&self) -> &[i64] {
        &self.elems
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.elems.iter().copied()
    }

    pub fn contains(&self, code: i64) -> bool {
        self.elems.binary_search(&code).is_ok()
    }

    pub fn decoded(&self) -> Vec<GroupElem> {
        self.elems.iter().map(|&c| self.ambient.decode(c)).collect()
    }

    pub fn min(&self) -> Option<i64> {
        self.elems.first().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.elems.last().copied()
    }

    fn same_ambient(&self, other: &GroupSet) -> Result<()> {
        self.ambient.ensure_same(&other.ambient)
    }

    fn with_codes(&self, mut codes: Vec<i64>) -> GroupSet {
        codes.sort_unstable();
        codes.dedup();
        GroupSet { ambient: self.ambient.clone(), elems: codes }
    }

    pub fn union(&self, other: &GroupSet) -> Result<GroupSet> {
        self.same_ambient(other)?;
        let mut codes = self.elems.clone();
        codes.extend_from_slice(&other.elems);
        Ok(self.with_codes(codes))
    }

    pub fn intersection(&self, other: &GroupSet) -> Result<GroupSet> {
        self.same_ambient(other)?;
        let codes = self.elems.iter().copied().filter(|&c| other.contains(c)).collect();
        Ok(GroupSet { ambient: self.ambient.clone(), elems: codes })
    }

    pub fn difference(&self, other: &GroupSet) -> Result<GroupSet> {
        self.same_ambient(other)?;
        let codes = self.elems.iter().copied().filter(|&c| !other.contains(c)).collect();
        Ok(GroupSet { ambient: self.ambient.clone(), elems: codes })
    }

    pub fn is_subset(&self, other: &GroupSet) -> bool {
        self.ambient == other.ambient && self.elems.iter().all(|&c| other.contains(c))
    }

    /// Number of common elements, without allocating.
    pub fn intersection_len(&self, other: &GroupSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.elems.len() && j < other.elems.len() {
            match self.elems[i].cmp(&other.elems[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn filter(&self, mut keep: impl FnMut(i64) -> bool) -> GroupSet {
        let codes = self.elems.iter().copied().filter(|&c| keep(c)).collect();
        GroupSet { ambient: self.ambient.clone(), elems: codes }
    }

    /// `{a + b : a in self, b in other}`.
    pub fn sumset(&self, other: &GroupSet) -> Result<GroupSet> {
        self.same_ambient(other)?;
        if let Some(order) = self.ambient.order() {
            if (self.len() * other.len()) as u64 > order {
                let mut hit = vec![false; order as usize];
                for &a in &self.elems {
                    for &b in &other.elems {
                        hit[self.ambient.add(a, b)? as usize] = true;
                    }
                }
                let codes = (0..order as i64).filter(|&c| hit[c as usize]).collect();
                return Ok(GroupSet { ambient: self.ambient.clone(), elems: codes });
            }
        }
        let mut codes = Vec::with_capacity(self.len() * other.len());
        for &a in &self.elems {
            for &b in &other.elems {
                codes.push(self.ambient.add(a, b)?);
            }
        }
        Ok(self.with_codes(codes))
    }

    /// `{a - b : a in self, b in other}`.
    pub fn difference_set(&self, other: &GroupSet) -> Result<GroupSet> {
        self.sumset(&other.negate()?)
    }

    /// `{s + s' : s, s' in self, s != s'}`.
    pub fn restricted_sumset(&self) -> Result<GroupSet> {
        let mut codes = Vec::with_capacity(self.len() * self.len().saturating_sub(1) / 2);
        for (i, &a) in self.elems.iter().enumerate() {
            for &b in &self.elems[i + 1..] {
                codes.push(self.ambient.add(a, b)?);
            }
        }
        Ok(self.with_codes(codes))
    }

    pub fn negate(&self) -> Result<GroupSet> {
        let codes = self.elems.iter().map(|&c| self.ambient.neg(c)).collect::<Result<Vec<_>>>()?;
        Ok(self.with_codes(codes))
    }

    pub fn translate(&self, x: i64) -> Result<GroupSet> {
        let codes = self.elems.iter().map(|&c| self.ambient.add(c, x)).collect::<Result<Vec<_>>>()?;
        Ok(self.with_codes(codes))
    }

    /// `{lambda * a : a in self}`. Over Z the scalar must be positive.
    pub fn dilate(&self, lambda: i64) -> Result<GroupSet> {
        if self.ambient.is_integers() && lambda < 1 {
            return Err(invalid(format!("dilation factor {lambda} must be >= 1 over Z")));
        }
        let codes = self
            .elems
            .iter()
            .map(|&c| self.ambient.scale(c, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_codes(codes))
    }

    /// True if `S = -S`.
    pub fn is_symmetric(&self) -> bool {
        self.elems.iter().all(|&c| self.ambient.neg(c).map(|n| self.contains(n)).unwrap_or(false))
    }

    /// Symmetric and containing the identity.
    pub fn is_symmetric_neighbourhood(&self) -> bool {
        self.contains(0) && self.is_symmetric()
    }

    /// True iff `(self +^ self) ∩ x = ∅`.
    pub fn is_sumfree_wrt(&self, x: &GroupSet) -> Result<bool> {
        self.same_ambient(x)?;
        for (i, &a) in self.elems.iter().enumerate() {
            for &b in &self.elems[i + 1..] {
                if x.contains(self.ambient.add(a, b)?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Partition of an integer set by exact power of two dividing each element.
    pub fn two_adic_decompose(&self) -> Result<TwoAdicDecomposition> {
        if !self.ambient.is_integers() {
            return Err(Error::Unsupported("2-adic decomposition is defined over Z only".into()));
        }
        let mut levels: BTreeMap<Level, Vec<i64>> = BTreeMap::new();
        for &z in &self.elems {
            levels.entry(Level::of(z)).or_default().push(z);
        }
        let levels = levels
            .into_iter()
            .map(|(l, v)| (l, GroupSet::from_sorted_unchecked(AmbientGroup::Integers, v)))
            .collect();
        Ok(TwoAdicDecomposition { levels })
    }

    /// Heavy 2-adic levels `{i : |A_i| > eps |A|}` and their union.
    pub fn heavy_levels(&self, eps: Rational) -> Result<(BTreeSet<Level>, GroupSet)> {
        if eps <= Rational::from_integer(0) || eps > Rational::from_integer(1) {
            return Err(invalid(format!("eps = {eps} must lie in (0, 1]")));
        }
        if self.is_empty() {
            return Err(invalid("heavy_levels needs a non-empty set"));
        }
        let dec = self.two_adic_decompose()?;
        let total = self.len() as i128;
        let (num, den) = (*eps.numer() as i128, *eps.denom() as i128);
        let mut index = BTreeSet::new();
        let mut codes = Vec::new();
        for (level, part) in &dec.levels {
            if part.len() as i128 * den > num * total {
                index.insert(*level);
                codes.extend_from_slice(&part.elems);
            }
        }
        Ok((index, self.with_codes(codes)))
    }
}

impl fmt::Display for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.decoded().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match e {
                GroupElem::Int(v) => write!(f, "{v}")?,
                GroupElem::Residues(r) => write!(f, "{r:?}")?,
            }
        }
        write!(f, "}}")
    }
}

/// A 2-adic level: the exponent of the largest power of 2 dividing z, or
/// `Infinite` for z = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Finite(u32),
    Infinite,
}

impl Level {
    pub fn of(z: i64) -> Level {
        if z == 0 {
            Level::Infinite
        } else {
            Level::Finite(z.trailing_zeros())
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(i) => write!(f, "{i}"),
            Level::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoAdicDecomposition {
    pub levels: BTreeMap<Level, GroupSet>,
}

impl TwoAdicDecomposition {
    pub fn level(&self, l: Level) -> Option<&GroupSet> {
        self.levels.get(&l)
    }

    pub fn level_size(&self, l: Level) -> usize {
        self.levels.get(&l).map_or(0, GroupSet::len)
    }
}
