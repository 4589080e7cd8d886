//! Instance generators. All randomness goes through `ChaCha8Rng` seeded with
//! `seed_from_u64`, so outputs are identical on every platform.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sets::{GroupSet, IntSet};
use crate::Rational;

/// Largest number of vectors scanned when building a Behrend set.
pub const BEHREND_SCAN_LIMIT: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    PowersOfTwo { n: u32 },
    Interval { n: i64 },
    Behrend { d: u64, n: u32 },
    RandomDense { n: i64, alpha: Rational, seed: u64 },
    Ap { length: i64, step: i64 },
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `{1, 2, 4, ..., 2^(n-1)}`.
pub fn powers_of_two(n: u32) -> Result<IntSet> {
    if n == 0 || n > 62 {
        return Err(Error::Range(format!("powers_of_two needs 1 <= n <= 62, got {n}")));
    }
    Ok(GroupSet::from_ints((0..n).map(|i| 1i64 << i)))
}

pub fn interval(n: i64) -> Result<IntSet> {
    if n < 1 {
        return Err(invalid(format!("interval length {n} must be positive")));
    }
    Ok(GroupSet::from_ints(1..=n))
}

/// `{1, 1 + step, ..., 1 + (length - 1) step}`.
pub fn ap(length: i64, step: i64) -> Result<IntSet> {
    if length < 1 || step < 1 {
        return Err(invalid("ap needs positive length and step"));
    }
    (length - 1).checked_mul(step).and_then(|v| v.checked_add(1)).ok_or(Error::Overflow("ap"))?;
    Ok(GroupSet::from_ints((0..length).map(|i| 1 + i * step)))
}

/// Digits in `[0, d)` of `n`-dimensional vectors, read in base `2d`, keeping
/// the sphere `sum x_i^2 = r` with the most points (smallest `r` on ties).
/// Carries never occur in base `2d`, so the result has no 3-term progression.
pub fn behrend(d: u64, n: u32) -> Result<IntSet> {
    if d < 2 || n < 1 {
        return Err(invalid("behrend needs d >= 2 and n >= 1"));
    }
    let base = 2 * d;
    if (n as f64) * (base as f64).log2() > 60.0 || base.checked_pow(n).is_none_or(|v| v > 1 << 60) {
        return Err(Error::Overflow("behrend: (2d)^n exceeds 2^60"));
    }
    let vectors = d.checked_pow(n).filter(|&v| v <= BEHREND_SCAN_LIMIT).ok_or_else(|| {
        Error::Unsupported(format!("behrend scans d^n vectors; limit is {BEHREND_SCAN_LIMIT}"))
    })?;
    let mut classes: BTreeMap<u64, Vec<i64>> = BTreeMap::new();
    for idx in 0..vectors {
        let (mut rest, mut norm, mut value, mut place) = (idx, 0u64, 0u64, 1u64);
        for _ in 0..n {
            let digit = rest % d;
            rest /= d;
            norm += digit * digit;
            value += digit * place;
            place *= base;
        }
        classes.entry(norm).or_default().push(value as i64);
    }
    let best = classes
        .into_iter()
        .max_by(|(r1, v1), (r2, v2)| v1.len().cmp(&v2.len()).then(r2.cmp(r1)))
        .map(|(_, v)| v)
        .unwrap_or_default();
    Ok(GroupSet::from_ints(best))
}

/// Each of `1..=n` kept independently with probability `alpha`.
pub fn random_dense(n: i64, alpha: Rational, seed: u64) -> Result<IntSet> {
    if alpha < Rational::from_integer(0) || alpha > Rational::from_integer(1) {
        return Err(invalid(format!("alpha = {alpha} must lie in [0, 1]")));
    }
    let mut rng = rng(seed);
    let (num, den) = (*alpha.numer(), *alpha.denom());
    Ok(GroupSet::from_ints((1..=n.max(0)).filter(|_| rng.gen_range(0..den) < num)))
}

/// True iff no `a, b, c` in the set with `a != c` satisfy `a + c = 2b`.
pub fn is_ap3_free(a: &IntSet) -> bool {
    let c = a.codes();
    for (i, &x) in c.iter().enumerate() {
        for &z in &c[i + 1..] {
            if (x + z) % 2 == 0 && a.contains((x + z) / 2) {
                return false;
            }
        }
    }
    true
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<IntSet> {
        match *self {
            GeneratorSpec::PowersOfTwo { n } => powers_of_two(n),
            GeneratorSpec::Interval { n } => interval(n),
            GeneratorSpec::Behrend { d, n } => behrend(d, n),
            GeneratorSpec::RandomDense { n, alpha, seed } => random_dense(n, alpha, seed),
            GeneratorSpec::Ap { length, step } => ap(length, step),
        }
    }
}

/// Parses `p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || invalid(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n.trim().parse().map_err(|_| bad())?, d))
        }
        None => Ok(Rational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

/// Accepts `powers:N`, `interval:N`, `behrend:D:N`, `random:N:ALPHA:SEED`
/// and `ap:LEN:STEP`.
impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<i64> {
            parts
                .get(i)
                .ok_or_else(|| invalid(format!("{s:?}: missing field {i}")))?
                .parse()
                .map_err(|_| invalid(format!("{s:?}: field {i} is not an integer")))
        };
        let spec = match (parts[0], parts.len()) {
            ("powers", 2) => GeneratorSpec::PowersOfTwo { n: num(1)? as u32 },
            ("interval", 2) => GeneratorSpec::Interval { n: num(1)? },
            ("behrend", 3) => GeneratorSpec::Behrend { d: num(1)? as u64, n: num(2)? as u32 },
            ("random", 4) => {
                GeneratorSpec::RandomDense { n: num(1)?, alpha: parse_rational(parts[2])?, seed: num(3)? as u64 }
            }
            ("ap", 3) => GeneratorSpec::Ap { length: num(1)?, step: num(2)? },
            _ => return Err(invalid(format!("unknown generator spec {s:?}"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::PowersOfTwo { n } => write!(f, "powers:{n}"),
            GeneratorSpec::Interval { n } => write!(f, "interval:{n}"),
            GeneratorSpec::Behrend { d, n } => write!(f, "behrend:{d}:{n}"),
            GeneratorSpec::RandomDense { n, alpha, seed } => write!(f, "random:{n}:{alpha}:{seed}"),
            GeneratorSpec::Ap { length, step } => write!(f, "ap:{length}:{step}"),
        }
    }
}
