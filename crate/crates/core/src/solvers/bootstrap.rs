//! Building a large sum-free subset round by round from nested blocks of the
//! largest elements. Each round asks an oracle for k elements of a fresh
//! block whose pairwise sums avoid that block; positivity then keeps the
//! union sum-free with respect to all of `A`.

use serde::{Deserialize, Serialize};

use super::greedy::{greedy_sumfree, GreedyOrder};
use super::mis::summing_witness;
use crate::error::{invalid, Error, Result};
use crate::sets::GroupSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapParams {
    pub k: usize,
    pub l: u64,
    pub d: u64,
    pub m: u32,
}

impl BootstrapParams {
    /// Size of the i-th block, `2D (2l(mk+1))^i`, or `None` on overflow.
    pub fn block_size(&self, i: u32) -> Option<u64> {
        let ratio = 2u64.checked_mul(self.l)?.checked_mul((self.m as u64).checked_mul(self.k as u64)? + 1)?;
        2u64.checked_mul(self.d)?.checked_mul(ratio.checked_pow(i)?)
    }

    fn validate(&self, len: usize) -> Result<()> {
        if self.k < 2 || self.l < 1 || self.d < 1 {
            return Err(invalid("bootstrap needs k >= 2, l >= 1, D >= 1"));
        }
        match self.block_size(self.m) {
            Some(s) if s <= len as u64 => Ok(()),
            _ => Err(invalid(format!(
                "2D(2l(mk+1))^m exceeds |A| = {len} for k={}, l={}, D={}, m={}",
                self.k, self.l, self.d, self.m
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    pub round: u32,
    pub block_size: usize,
    pub candidates: usize,
    pub chosen: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BootstrapOutcome {
    #[serde(serialize_with = "ser_set")]
    pub set: GroupSet,
    pub rounds: Vec<RoundTrace>,
    /// First round whose oracle call returned nothing.
    pub failed_round: Option<u32>,
    /// Result of re-checking `(S +^ S) ∩ A = ∅` on the returned set.
    pub verified_sumfree: bool,
}

fn ser_set<S: serde::Serializer>(set: &GroupSet, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(set.codes())
}

/// Oracle signature: `(candidates A_i, block Z_i, k)` to a k-subset of the
/// candidates whose restricted sums miss the block.
pub type Oracle<'a> = dyn FnMut(&GroupSet, &GroupSet, usize) -> Option<GroupSet> + 'a;

pub fn exact_oracle(cands: &GroupSet, block: &GroupSet, k: usize) -> Option<GroupSet> {
    summing_witness(cands, block, k).ok().flatten()
}

pub fn greedy_oracle(cands: &GroupSet, block: &GroupSet, k: usize) -> Option<GroupSet> {
    let s = greedy_sumfree(cands, block, GreedyOrder::DecreasingAbs).ok()?;
    (s.len() >= k).then(|| GroupSet::from_ints(s.codes().iter().rev().take(k).copied()))
}

pub fn bootstrap_construct(a: &GroupSet, params: BootstrapParams, oracle: &mut Oracle<'_>) -> Result<BootstrapOutcome> {
    if !a.ambient().is_integers() {
        return Err(Error::Unsupported("the construction is defined over Z only".into()));
    }
    if a.min().is_some_and(|m| m <= 0) {
        return Err(invalid("all elements must be strictly positive"));
    }
    params.validate(a.len())?;
    let largest = |size: u64| GroupSet::from_ints(a.codes()[a.len() - size as usize..].iter().copied());

    let mut rounds = Vec::new();
    let mut chosen: Vec<i64> = Vec::new();
    let mut failed_round = None;
    let mut prev_block: Option<GroupSet> = None;
    for i in 0..=params.m {
        let block = largest(params.block_size(i).expect("validated above"));
        let cands = match &prev_block {
            None => block.clone(),
            Some(prev) => {
                let mut shifts = chosen.clone();
                shifts.push(0);
                let forbidden = prev.difference_set(&GroupSet::from_ints(shifts))?;
                block.difference(&forbidden)?
            }
        };
        let pick = oracle(&cands, &block, params.k);
        if let Some(s) = &pick {
            if s.len() != params.k || !s.is_subset(&cands) || !s.is_sumfree_wrt(&block)? {
                return Err(invalid(format!("oracle returned an inadmissible set in round {i}: {s}")));
            }
            chosen.extend_from_slice(s.codes());
        }
        rounds.push(RoundTrace {
            round: i,
            block_size: block.len(),
            candidates: cands.len(),
            chosen: pick.as_ref().map(|s| s.codes().to_vec()),
        });
        if pick.is_none() {
            failed_round = Some(i);
            break;
        }
        prev_block = Some(block);
    }
    let set = GroupSet::from_ints(chosen);
    let verified_sumfree = set.is_sumfree_wrt(a)?;
    Ok(BootstrapOutcome { set, rounds, failed_round, verified_sumfree })
}
