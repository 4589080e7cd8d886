//! Subspaces of `F_p^n` in reduced row-echelon form.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::AmbientGroup;

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i128, (a % p) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "{a} not invertible mod {p}");
    t0.rem_euclid(p as i128) as u64
}

/// `F_p^n` with `p` prime, as the finite group `(Z/p)^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldSpace {
    pub p: u64,
    pub n: usize,
}

impl FieldSpace {
    pub fn new(p: u64, n: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(invalid(format!("{p} is not prime")));
        }
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        AmbientGroup::vector_space(p, n)?;
        Ok(FieldSpace { p, n })
    }

    /// Recognises `(Z/p)^n` with `p` prime.
    pub fn of(g: &AmbientGroup) -> Result<Self> {
        let m = g.ensure_finite()?;
        if m.iter().any(|&q| q != m[0]) {
            return Err(invalid(format!("{g} is not of the form (Z/p)^n")));
        }
        Self::new(m[0], m.len())
    }

    pub fn ambient(&self) -> AmbientGroup {
        AmbientGroup::vector_space(self.p, self.n).expect("validated on construction")
    }

    pub fn order(&self) -> u64 {
        self.p.pow(self.n as u32)
    }

    pub fn vec_of(&self, code: i64) -> Vec<u64> {
        let mut c = code as u64;
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = c % self.p;
            c /= self.p;
        }
        out
    }

    pub fn code_of(&self, v: &[u64]) -> i64 {
        v.iter().fold(0u64, |acc, &x| acc * self.p + x % self.p) as i64
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(&x, &y)| (x + y) % self.p).collect()
    }

    pub fn scale(&self, a: &[u64], lambda: u64) -> Vec<u64> {
        a.iter().map(|&x| (x * (lambda % self.p)) % self.p).collect()
    }

    /// `lambda * code` for a possibly negative integer scalar.
    pub fn scale_code(&self, code: i64, lambda: i64) -> i64 {
        let l = lambda.rem_euclid(self.p as i64) as u64;
        self.code_of(&self.scale(&self.vec_of(code), l))
    }

    pub fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        a.iter().zip(b).fold(0, |acc, (&x, &y)| (acc + x * y) % self.p)
    }
}

/// Row-reduces in place; returns the pivot column of each nonzero row.
fn rref(rows: &mut Vec<Vec<u64>>, p: u64) -> Vec<usize> {
    let width = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut top = 0;
    for col in 0..width {
        let Some(found) = (top..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(top, found);
        let inv = inv_mod(rows[top][col], p);
        for x in rows[top].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows.len() {
            if i != top && rows[i][col] != 0 {
                let f = rows[i][col];
                for c in 0..width {
                    rows[i][c] = (rows[i][c] + (p - f) * rows[top][c]) % p;
                }
            }
        }
        pivots.push(col);
        top += 1;
        if top == rows.len() {
            break;
        }
    }
    rows.truncate(top);
    pivots
}

/// Solutions `c in F_p^width` of `rows . c = 0`, as a basis.
pub(crate) fn nullspace(rows: &[Vec<u64>], width: usize, p: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let pivots = rref(&mut m, p);
    let mut out = Vec::new();
    for free in (0..width).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u64; width];
        v[free] = 1;
        for (row, &pc) in m.iter().zip(&pivots) {
            v[pc] = (p - row[free]) % p;
        }
        out.push(v);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Subspace {
    pub p: u64,
    pub n: usize,
    /// Reduced row-echelon basis.
    pub basis: Vec<Vec<u64>>,
    #[serde(skip)]
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn span(space: &FieldSpace, generators: &[Vec<u64>]) -> Result<Self> {
        if generators.iter().any(|g| g.len() != space.n) {
            return Err(invalid(format!("generators must have length {}", space.n)));
        }
        let mut rows: Vec<Vec<u64>> = generators.iter().map(|g| g.iter().map(|x| x % space.p).collect()).collect();
        let pivots = rref(&mut rows, space.p);
        Ok(Subspace { p: space.p, n: space.n, basis: rows, pivots })
    }

    pub fn zero(space: &FieldSpace) -> Self {
        Subspace { p: space.p, n: space.n, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(space: &FieldSpace) -> Self {
        let gens: Vec<Vec<u64>> = (0..space.n).map(|i| (0..space.n).map(|j| u64::from(i == j)).collect()).collect();
        Self::span(space, &gens).expect("identity rows")
    }

    /// `{x : <f, x> = 0 for every form f}`.
    pub fn annihilator(space: &FieldSpace, forms: &[Vec<u64>]) -> Result<Self> {
        Self::span(space, &nullspace(forms, space.n, space.p))
    }

    pub fn space(&self) -> FieldSpace {
        FieldSpace { p: self.p, n: self.n }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn size(&self) -> u64 {
        self.p.pow(self.dim() as u32)
    }

    /// The representative of `x + U` with zeros at every pivot column.
    pub fn reduce(&self, x: &[u64]) -> Vec<u64> {
        let mut v = x.to_vec();
        for (row, &pc) in self.basis.iter().zip(&self.pivots) {
            let f = v[pc];
            if f != 0 {
                for (vi, &ri) in v.iter_mut().zip(row) {
                    *vi = (*vi + (self.p - f) * ri) % self.p;
                }
            }
        }
        v
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        self.reduce(x).iter().all(|&c| c == 0)
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    /// Coordinates of `x` in the basis; `None` when `x` is not in `U`.
    pub fn coordinates(&self, x: &[u64]) -> Option<Vec<u64>> {
        self.contains(x).then(|| self.pivots.iter().map(|&pc| x[pc]).collect())
    }

    pub fn from_coordinates(&self, c: &[u64]) -> Vec<u64> {
        let mut v = vec![0u64; self.n];
        for (row, &ci) in self.basis.iter().zip(c) {
            for (vi, &ri) in v.iter_mut().zip(row) {
                *vi = (*vi + ci * ri) % self.p;
            }
        }
        v
    }

    /// The subspace of `U` cut out by linear forms on its coordinates.
    pub fn coordinate_kernel(&self, forms: &[Vec<u64>]) -> Result<Subspace> {
        if forms.iter().any(|f| f.len() != self.dim()) {
            return Err(invalid("forms must be given on the coordinates of U"));
        }
        let gens: Vec<Vec<u64>> =
            nullspace(forms, self.dim(), self.p).iter().map(|c| self.from_coordinates(c)).collect();
        Subspace::span(&self.space(), &gens)
    }

    /// Codes of `x + U` in coordinate order (first coordinate most significant).
    pub fn coset_codes(&self, x: &[u64]) -> Result<Vec<i64>> {
        let size = self.size();
        if size > crate::group::MAX_DENSE_ORDER {
            return Err(Error::Unsupported(format!("subspace of size {size} is too large to enumerate")));
        }
        let space = self.space();
        let d = self.dim();
        let mut out = Vec::with_capacity(size as usize);
        let mut c = vec![0u64; d];
        loop {
            out.push(space.code_of(&space.add(x, &self.from_coordinates(&c))));
            let mut i = d;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                c[i] += 1;
                if c[i] < self.p {
                    break;
                }
                c[i] = 0;
            }
        }
    }

    /// Every subspace of the given dimension, by enumerating RREF matrices.
    pub fn enumerate(space: &FieldSpace, dim: usize, limit: usize) -> Result<Vec<Subspace>> {
        let (p, n) = (space.p, space.n);
        if dim > n {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let mut pivots = Vec::new();
        enumerate_pivots(n, dim, 0, &mut pivots, &mut |piv| {
            let free: Vec<(usize, usize)> = piv
                .iter()
                .enumerate()
                .flat_map(|(r, &pc)| ((pc + 1)..n).filter(|c| !piv.contains(c)).map(move |c| (r, c)))
                .collect();
            let count = (p as u128).checked_pow(free.len() as u32).unwrap_or(u128::MAX);
            if out.len() as u128 + count > limit as u128 {
                return Err(Error::Range(format!("more than {limit} subspaces of dimension {dim}")));
            }
            for idx in 0..count as u64 {
                let mut rows = vec![vec![0u64; n]; dim];
                for (r, &pc) in piv.iter().enumerate() {
                    rows[r][pc] = 1;
                }
                let mut k = idx;
                for &(r, c) in &free {
                    rows[r][c] = k % p;
                    k /= p;
                }
                out.push(Subspace { p, n, basis: rows, pivots: piv.to_vec() });
            }
            Ok(())
        })?;
        Ok(out)
    }
}

fn enumerate_pivots(
    n: usize,
    dim: usize,
    start: usize,
    cur: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if cur.len() == dim {
        return visit(cur);
    }
    for c in start..n {
        cur.push(c);
        enumerate_pivots(n, dim, c + 1, cur, visit)?;
        cur.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3(n: usize) -> FieldSpace {
        FieldSpace::new(3, n).unwrap()
    }

    #[test]
    fn span_and_membership() {
        let v = f3(3);
        let u = Subspace::span(&v, &[vec![1, 1, 0], vec![2, 2, 0], vec![0, 1, 1]]).unwrap();
        assert_eq!(u.dim(), 2);
        assert_eq!(u.size(), 9);
        assert!(u.contains(&[1, 2, 1]));
        assert!(!u.contains(&[1, 0, 0]));
        let codes = u.coset_codes(&[0, 0, 0]).unwrap();
        assert_eq!(codes.len(), 9);
        for c in codes {
            assert!(u.contains(&v.vec_of(c)));
        }
    }

    #[test]
    fn annihilator_and_kernel() {
        let v = f3(2);
        let k = Subspace::annihilator(&v, &[vec![1, 1]]).unwrap();
        assert_eq!(k.dim(), 1);
        assert!(k.contains(&[1, 2]));
        let full = Subspace::full(&v);
        let same = full.coordinate_kernel(&[vec![1, 1]]).unwrap();
        assert_eq!(same, k);
    }

    #[test]
    fn reduce_is_a_coset_invariant() {
        let v = f3(3);
        let u = Subspace::span(&v, &[vec![1, 2, 0]]).unwrap();
        let x = vec![2, 0, 1];
        let y = v.add(&x, &[2, 1, 0]);
        assert_eq!(u.reduce(&x), u.reduce(&y));
        assert_ne!(u.reduce(&x), u.reduce(&[0, 0, 1]));
    }

    #[test]
    fn subspace_counts_are_gaussian_binomials() {
        // [4 choose 2]_3 = (3^4 - 1)(3^3 - 1) / ((3^2 - 1)(3 - 1)) = 130
        let v = f3(4);
        assert_eq!(Subspace::enumerate(&v, 2, 1000).unwrap().len(), 130);
        assert_eq!(Subspace::enumerate(&v, 0, 10).unwrap().len(), 1);
        let f5 = FieldSpace::new(5, 2).unwrap();
        assert_eq!(Subspace::enumerate(&f5, 1, 100).unwrap().len(), 6);
        assert!(Subspace::enumerate(&v, 2, 10).is_err());
    }

    #[test]
    fn inverses() {
        for p in [3u64, 5, 7, 13] {
            for a in 1..p {
                assert_eq!(a * inv_mod(a, p) % p, 1);
            }
        }
        assert!(FieldSpace::new(9, 2).is_err());
    }
}
