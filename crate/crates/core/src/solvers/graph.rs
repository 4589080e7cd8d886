use crate::error::Result;
use crate::sets::GroupSet;

/// Dense bit-row graph on the elements of `A`; `{a, b}` is an edge when
/// `a != b` and `a + b` lies in `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    vertices: GroupSet,
    words: usize,
    rows: Vec<u64>,
}

pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

impl ConflictGraph {
    pub fn new(a: &GroupSet, x: &GroupSet) -> Result<Self> {
        a.ambient().ensure_same(x.ambient())?;
        let n = a.len();
        let words = words_for(n);
        let mut rows = vec![0u64; n * words];
        let codes = a.codes();
        let g = a.ambient();
        for i in 0..n {
            for j in i + 1..n {
                if x.contains(g.add(codes[i], codes[j])?) {
                    rows[i * words + j / 64] |= 1 << (j % 64);
                    rows[j * words + i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(ConflictGraph { vertices: a.clone(), words, rows })
    }

    pub fn vertices(&self) -> &GroupSet {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.len()).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Edges as element pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(i64, i64)> {
        let c = self.vertices.codes();
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.has_edge(i, j) {
                    out.push((c[i], c[j]));
                }
            }
        }
        out
    }

    pub fn density(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }

    pub fn is_independent(&self, indices: &[usize]) -> bool {
        indices
            .iter()
            .enumerate()
            .all(|(p, &i)| indices[p + 1..].iter().all(|&j| !self.has_edge(i, j)))
    }

    pub fn subset(&self, indices: &[usize]) -> GroupSet {
        let c = self.vertices.codes();
        let mut codes: Vec<i64> = indices.iter().map(|&i| c[i]).collect();
        codes.sort_unstable();
        GroupSet::from_sorted_unchecked(self.vertices.ambient().clone(), codes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_edges() {
        let a = GroupSet::from_ints(1..=5);
        let g = ConflictGraph::new(&a, &a).unwrap();
        assert_eq!(g.edges(), vec![(1, 2), (1, 3), (1, 4), (2, 3)]);
    }

    #[test]
    fn powers_of_two_edgeless() {
        let a = GroupSet::from_ints((0..20).map(|i| 1i64 << i));
        assert_eq!(ConflictGraph::new(&a, &a).unwrap().edge_count(), 0);
    }

    #[test]
    fn triangle() {
        let a = GroupSet::from_ints([-1, 0, 1]);
        let g = ConflictGraph::new(&a, &a).unwrap();
        assert_eq!(g.edges(), vec![(-1, 0), (-1, 1), (0, 1)]);
    }

    #[test]
    fn wide_rows() {
        let a = GroupSet::from_ints(0..130);
        let x = GroupSet::from_ints([129]);
        let g = ConflictGraph::new(&a, &x).unwrap();
        assert!(g.has_edge(0, 129) && g.has_edge(64, 65) && !g.has_edge(1, 129));
        assert_eq!(g.edge_count(), 65);
    }
}
