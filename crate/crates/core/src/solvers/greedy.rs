use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sets::GroupSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyOrder {
    /// Largest absolute value first; ties go to the smaller element.
    #[default]
    DecreasingAbs,
    Increasing,
    SeededRandom(u64),
}

/// Scans `A` in the given order, keeping each element whose sums with the
/// kept elements all avoid `X`. The result is inclusion-maximal.
pub fn greedy_sumfree(a: &GroupSet, x: &GroupSet, order: GreedyOrder) -> Result<GroupSet> {
    a.ambient().ensure_same(x.ambient())?;
    let mut seq: Vec<i64> = a.codes().to_vec();
    match order {
        GreedyOrder::Increasing => {}
        GreedyOrder::DecreasingAbs => seq.sort_by(|p, q| q.unsigned_abs().cmp(&p.unsigned_abs()).then(p.cmp(q))),
        GreedyOrder::SeededRandom(seed) => seq.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
    let g = a.ambient();
    let mut kept: Vec<i64> = Vec::new();
    'next: for c in seq {
        for &s in &kept {
            if x.contains(g.add(c, s)?) {
                continue 'next;
            }
        }
        kept.push(c);
    }
    GroupSet::new(g.clone(), kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = GroupSet::from_ints([-1, 0, 1]);
        assert_eq!(greedy_sumfree(&t, &t, GreedyOrder::default()).unwrap().len(), 1);
        let p = GroupSet::from_ints((0..12).map(|i| 1i64 << i));
        assert_eq!(greedy_sumfree(&p, &p, GreedyOrder::Increasing).unwrap(), p);
        let i5 = GroupSet::from_ints(1..=5);
        assert_eq!(greedy_sumfree(&i5, &i5, GreedyOrder::DecreasingAbs).unwrap(), GroupSet::from_ints([3, 4, 5]));
    }

    #[test]
    fn seeded_order_is_reproducible() {
        let a = GroupSet::from_ints(1..=40);
        let one = greedy_sumfree(&a, &a, GreedyOrder::SeededRandom(9)).unwrap();
        assert_eq!(one, greedy_sumfree(&a, &a, GreedyOrder::SeededRandom(9)).unwrap());
        assert!(one.is_sumfree_wrt(&a).unwrap());
    }
}
