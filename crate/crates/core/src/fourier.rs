//! Fourier analysis on finite abelian groups.
//!
//! Characters of `Z/n_1 x ... x Z/n_d` are indexed by codes in the same mixed
//! radix as group elements: the code of `t` names `x -> exp(2 pi i sum t_i x_i / n_i)`.
//! Multiplying characters is adding codes, so sets of characters are ordinary
//! `GroupSet`s in the ambient group.
//!
//! Phases are computed exactly as integers modulo `L = lcm(n_i)`, so
//! `|gamma(x) - 1|` is known exactly up to the final sine.

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::AmbientGroup;
use crate::report::{Verdict, VerificationReport};
use crate::sets::GroupSet;
use crate::systems::{bohr_system, subgroup_system, ClosedPairWitness, System};
use crate::Rational;

pub type Complex = Complex64;

/// Largest group accepted by the dense transforms.
pub const MAX_TRANSFORM_ORDER: u64 = 1 << 20;

/// Coefficients closer than this to a threshold are reported as borderline.
pub const COEFF_TOLERANCE: f64 = 1e-9;

/// Exact character/element pairing for one ambient group.
#[derive(Clone, Debug)]
pub struct Pairing {
    ambient: AmbientGroup,
    moduli: Vec<u64>,
    lcm: u64,
    weights: Vec<u64>,
}

impl Pairing {
    pub fn new(ambient: &AmbientGroup) -> Result<Self> {
        let moduli = ambient.ensure_finite()?.to_vec();
        let lcm = moduli.iter().fold(1u64, |l, &n| l.lcm(&n));
        let weights = moduli.iter().map(|&n| lcm / n).collect();
        Ok(Pairing { ambient: ambient.clone(), moduli, lcm, weights })
    }

    pub fn ambient(&self) -> &AmbientGroup {
        &self.ambient
    }

    pub fn lcm(&self) -> u64 {
        self.lcm
    }

    /// `k` with `gamma_t(x) = exp(2 pi i k / L)`.
    pub fn phase(&self, t: i64, x: i64) -> u64 {
        if self.moduli.len() == 1 {
            return (t as u64 * x as u64) % self.lcm;
        }
        let (mut t, mut x) = (t as u64, x as u64);
        let mut k: u128 = 0;
        for (&n, &w) in self.moduli.iter().zip(&self.weights).rev() {
            k += ((t % n) * (x % n) % n) as u128 * w as u128;
            t /= n;
            x /= n;
        }
        (k % self.lcm as u128) as u64
    }

    /// Circular distance of the phase from 0, in `[0, L/2]`.
    pub fn distance(&self, t: i64, x: i64) -> u64 {
        let k = self.phase(t, x);
        k.min(self.lcm - k)
    }

    pub fn value(&self, t: i64, x: i64) -> Complex {
        let theta = 2.0 * std::f64::consts::PI * self.phase(t, x) as f64 / self.lcm as f64;
        Complex::from_polar(1.0, theta)
    }
}

/// `|exp(2 pi i d / L) - 1| = 2 sin(pi d / L)` for `d <= L/2`.
pub fn chord(d: u64, l: u64) -> f64 {
    2.0 * (std::f64::consts::PI * d as f64 / l as f64).sin()
}

/// Decides `2 sin(pi d / L) < r` for rational `r`.
///
/// By Niven's theorem the chord is rational only when it is 0, 1 or 2, so
/// those three radii are settled with integer arithmetic and every other
/// comparison is strict with nonzero gap.
pub fn chord_below(d: u64, l: u64, r: Rational) -> bool {
    let zero = Rational::zero();
    if r <= zero {
        return false;
    }
    if r > Rational::from_integer(2) {
        return true;
    }
    if r == Rational::from_integer(2) {
        return 2 * d < l;
    }
    if r == Rational::one() {
        return 6 * d < l;
    }
    chord(d, l) < rational_f64(r)
}

pub(crate) fn rational_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Largest `d` in `[0, L/2]` with `chord_below(d, L, r)`, if any.
pub(crate) fn max_distance_below(l: u64, r: Rational) -> Option<u64> {
    if !chord_below(0, l, r) {
        return None;
    }
    let (mut lo, mut hi) = (0u64, l / 2);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if chord_below(mid, l, r) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(lo)
}

/// For each character, the largest phase distance it attains on `W`.
/// Membership of `Ann(W, r)` is then a single comparison.
#[derive(Clone, Debug)]
pub struct AnnTable {
    pairing: Pairing,
    max_dist: Vec<u64>,
}

impl AnnTable {
    pub fn new(w: &GroupSet) -> Result<Self> {
        let pairing = Pairing::new(w.ambient())?;
        let order = check_order(w.ambient())?;
        let codes = w.codes();
        let max_dist = (0..order as i64)
            .into_par_iter()
            .map(|t| codes.iter().map(|&x| pairing.distance(t, x)).max().unwrap_or(0))
            .collect();
        Ok(AnnTable { pairing, max_dist })
    }

    /// `gamma_t` in `Ann(W, r)`. A radius of zero means the exact annihilator.
    pub fn contains(&self, t: i64, r: Rational) -> bool {
        let d = self.max_dist[t as usize];
        if r.is_zero() {
            d == 0
        } else {
            chord_below(d, self.pairing.lcm, r)
        }
    }

    /// `max_{x in W} |gamma_t(x) - 1|`.
    pub fn sup_chord(&self, t: i64) -> f64 {
        chord(self.max_dist[t as usize], self.pairing.lcm)
    }

    pub fn members(&self, r: Rational) -> GroupSet {
        let codes = (0..self.max_dist.len() as i64).filter(|&t| self.contains(t, r));
        GroupSet::from_sorted_unchecked(self.pairing.ambient.clone(), codes.collect())
    }
}

/// `{gamma : |gamma(x) - 1| < eps for all x in W}`; `eps = 0` gives the
/// exact annihilator.
pub fn ann(w: &GroupSet, eps: Rational) -> Result<GroupSet> {
    Ok(AnnTable::new(w)?.members(eps))
}

fn check_order(g: &AmbientGroup) -> Result<u64> {
    let order = g.order().ok_or_else(|| Error::Unsupported("transforms need a finite group".into()))?;
    if order > MAX_TRANSFORM_ORDER {
        return Err(Error::Unsupported(format!("group order {order} exceeds {MAX_TRANSFORM_ORDER}")));
    }
    Ok(order)
}

/// A complex-valued function on a finite group, stored densely by code.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseFunction {
    ambient: AmbientGroup,
    values: Vec<Complex>,
}

impl DenseFunction {
    pub fn new(ambient: AmbientGroup, values: Vec<Complex>) -> Result<Self> {
        let order = check_order(&ambient)?;
        if values.len() as u64 != order {
            return Err(invalid(format!("expected {order} values, got {}", values.len())));
        }
        Ok(DenseFunction { ambient, values })
    }

    pub fn zeros(ambient: AmbientGroup) -> Result<Self> {
        let order = check_order(&ambient)?;
        Ok(DenseFunction { ambient, values: vec![Complex::zero(); order as usize] })
    }

    pub fn from_real(ambient: AmbientGroup, values: &[f64]) -> Result<Self> {
        Self::new(ambient, values.iter().map(|&v| Complex::new(v, 0.0)).collect())
    }

    pub fn indicator(set: &GroupSet) -> Result<Self> {
        Self::weighted(set, 1.0)
    }

    /// The uniform probability measure `m_Z`.
    pub fn uniform_measure(set: &GroupSet) -> Result<Self> {
        if set.is_empty() {
            return Err(invalid("uniform measure on the empty set"));
        }
        Self::weighted(set, 1.0 / set.len() as f64)
    }

    pub fn delta(ambient: AmbientGroup, x: i64) -> Result<Self> {
        let mut f = Self::zeros(ambient)?;
        *f.values.get_mut(x as usize).ok_or_else(|| invalid(format!("{x} is not an element")))? = Complex::one();
        Ok(f)
    }

    fn weighted(set: &GroupSet, w: f64) -> Result<Self> {
        let mut f = Self::zeros(set.ambient().clone())?;
        for c in set.iter() {
            f.values[c as usize] = Complex::new(w, 0.0);
        }
        Ok(f)
    }

    pub fn ambient(&self) -> &AmbientGroup {
        &self.ambient
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn get(&self, x: i64) -> Complex {
        self.values[x as usize]
    }

    /// `f(x) = g(x) h(x)`.
    pub fn pointwise(&self, other: &DenseFunction) -> Result<DenseFunction> {
        self.ambient.ensure_same(&other.ambient)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(DenseFunction { ambient: self.ambient.clone(), values })
    }

    /// `f(x) = g(x)` on the set and 0 elsewhere, scaled by `w`.
    pub fn restrict(&self, set: &GroupSet, w: f64) -> Result<DenseFunction> {
        self.ambient.ensure_same(set.ambient())?;
        let mut out = Self::zeros(self.ambient.clone())?;
        for c in set.iter() {
            out.values[c as usize] = self.values[c as usize] * w;
        }
        Ok(out)
    }

    /// `f^(gamma) = sum_x f(x) conj(gamma(x))`, one fast transform per axis.
    pub fn dft(&self) -> DenseFunction {
        self.transform(false)
    }

    /// Inverse of [`DenseFunction::dft`], including the `1/|G|` factor.
    pub fn inverse_dft(&self) -> DenseFunction {
        let mut out = self.transform(true);
        let scale = 1.0 / self.values.len() as f64;
        out.values.iter_mut().for_each(|v| *v *= scale);
        out
    }

    fn transform(&self, inverse: bool) -> DenseFunction {
        let moduli = self.ambient.moduli().expect("dense functions live on finite groups");
        let mut data = self.values.clone();
        let mut planner = FftPlanner::<f64>::new();
        let mut stride = 1usize;
        for &n in moduli.iter().rev() {
            let n = n as usize;
            let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
            let block = n * stride;
            let mut line = vec![Complex::zero(); n];
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + offset + k * stride];
                    }
                    fft.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + offset + k * stride] = *v;
                    }
                }
            }
            stride = block;
        }
        DenseFunction { ambient: self.ambient.clone(), values: data }
    }

    /// `(f * g)(x) = sum_z f(z) g(x - z)`, skipping zero entries.
    pub fn convolve(&self, other: &DenseFunction) -> Result<DenseFunction> {
        self.ambient.ensure_same(&other.ambient)?;
        let mut out = Self::zeros(self.ambient.clone())?;
        let support = |f: &DenseFunction| -> Vec<(i64, Complex)> {
            f.values.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| (i as i64, *v)).collect()
        };
        let (fs, gs) = (support(self), support(other));
        for &(z, a) in &fs {
            for &(y, b) in &gs {
                out.values[self.ambient.add(z, y)? as usize] += a * b;
            }
        }
        Ok(out)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumMember {
    pub character: i64,
    pub re: f64,
    pub im: f64,
}

impl SpectrumMember {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// `Spec_eps(mu) = {gamma : |mu^(gamma)| > eps}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub threshold: f64,
    pub members: Vec<SpectrumMember>,
    /// Characters whose coefficient is within `COEFF_TOLERANCE` of the
    /// threshold, on either side.
    pub borderline: Vec<i64>,
}

impl Spectrum {
    pub fn characters(&self) -> Vec<i64> {
        self.members.iter().map(|m| m.character).collect()
    }

    pub fn contains(&self, t: i64) -> bool {
        self.members.binary_search_by_key(&t, |m| m.character).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Large spectrum of `mu`, read off its transform.
pub fn spec(mu: &DenseFunction, eps: f64) -> Spectrum {
    spectrum_of_transform(&mu.dft(), eps)
}

fn spectrum_of_transform(hat: &DenseFunction, eps: f64) -> Spectrum {
    let mut members = Vec::new();
    let mut borderline = Vec::new();
    for (t, v) in hat.values.iter().enumerate() {
        let mag = v.norm();
        if (mag - eps).abs() <= COEFF_TOLERANCE {
            borderline.push(t as i64);
        }
        if mag > eps {
            members.push(SpectrumMember { character: t as i64, re: v.re, im: v.im });
        }
    }
    Spectrum { threshold: eps, members, borderline }
}

/// Confirms `Spec_kappa(m_Z)` lies in `Ann(W, tau / kappa)` for a closed pair.
pub fn check_inv(witness: &ClosedPairWitness, kappa: Rational) -> Result<VerificationReport> {
    witness.validate()?;
    if kappa <= Rational::zero() || kappa > Rational::one() {
        return Err(invalid(format!("kappa = {kappa} must lie in (0, 1]")));
    }
    let radius = witness.tau / kappa;
    let mut report = VerificationReport::new("inv");
    if radius > Rational::from_integer(2) {
        report.verdict = Verdict::Vacuous;
        report.details = serde_json::json!({ "radius": radius.to_string() });
        return Ok(report);
    }
    let spectrum = spec(&DenseFunction::uniform_measure(&witness.z)?, rational_f64(kappa));
    let table = AnnTable::new(&witness.w)?;
    let r = rational_f64(radius);
    report.tolerance_dependent = !spectrum.borderline.is_empty();
    for m in &spectrum.members {
        report.cases += 1;
        let slack = r - table.sup_chord(m.character);
        report.observe_margin(slack);
        if slack.abs() <= COEFF_TOLERANCE {
            report.tolerance_dependent = true;
        }
        if !table.contains(m.character, radius) {
            report.counterexample(serde_json::json!({
                "character": m.character,
                "coefficient": m.magnitude(),
                "sup_chord": table.sup_chord(m.character),
            }));
        }
    }
    report.details = serde_json::json!({
        "radius": radius.to_string(),
        "spectrum_size": spectrum.len(),
    });
    Ok(report)
}

/// Result of the almost-orthogonality argument on a closed pair.
#[derive(Clone, Debug, Serialize)]
pub struct ParsevalCover {
    /// Greedy maximal set of spectrum characters with disjoint neighbourhoods.
    pub lambda: Vec<i64>,
    pub spectrum: Spectrum,
    #[serde(skip)]
    pub system: System,
    /// `lambda - lambda'` avoids `Ann(W, r) - Ann(W, r)`, `r = 2 tau / eps^2`.
    pub disjoint: bool,
    /// `|lambda| eps^2 <= 2`.
    pub size_bound: bool,
    /// Every spectrum character is within `Ann(W, 4 tau / eps^2)` of `lambda`.
    pub covered: bool,
    /// Spectrum inside `Ann(B_0 ∩ W, 4 tau / eps^2 + delta)`.
    pub annihilated: bool,
    pub tolerance_dependent: bool,
}

impl ParsevalCover {
    pub fn all_verified(&self) -> bool {
        self.disjoint && self.size_bound && self.covered && self.annihilated
    }
}

/// `||f||^2` in `L2(m_Z)`.
fn l2_on(f: &DenseFunction, z: &GroupSet) -> f64 {
    z.iter().map(|c| f.get(c).norm_sqr()).sum::<f64>() / z.len() as f64
}

pub fn parseval_spectrum_cover(
    f: &DenseFunction,
    witness: &ClosedPairWitness,
    eps: Rational,
    delta: Rational,
    depth: usize,
) -> Result<ParsevalCover> {
    witness.validate()?;
    f.ambient.ensure_same(witness.z.ambient())?;
    if eps <= Rational::zero() {
        return Err(invalid("eps must be positive"));
    }
    if delta <= Rational::zero() || delta > Rational::new(1, 2) {
        return Err(invalid(format!("delta = {delta} must lie in (0, 1/2]")));
    }
    let norm = l2_on(f, &witness.z);
    if norm > 1.0 + COEFF_TOLERANCE {
        return Err(invalid(format!("||f||^2 in L2(m_Z) is {norm}, must be at most 1")));
    }
    let g = f.restrict(&witness.z, 1.0 / witness.z.len() as f64)?;
    let spectrum = spectrum_of_transform(&g.dft(), rational_f64(eps));
    let inv_eps_sq = (eps * eps).recip();
    let r2 = inv_eps_sq * witness.tau * 2;
    let r4 = r2 * 2;
    let table = AnnTable::new(&witness.w)?;
    let a2 = table.members(r2);
    let g_amb = f.ambient.clone();

    // Translates of Ann(W, r2) at l and l' meet iff l - l' lies in A2 - A2.
    let meets = |l: i64, lp: i64| -> Result<bool> {
        let diff = g_amb.sub(l, lp)?;
        for a in a2.iter() {
            if a2.contains(g_amb.sub(a, diff)?) {
                return Ok(true);
            }
        }
        Ok(false)
    };

    let mut order: Vec<&SpectrumMember> = spectrum.members.iter().collect();
    order.sort_by(|a, b| b.magnitude().total_cmp(&a.magnitude()).then(a.character.cmp(&b.character)));
    let mut lambda: Vec<i64> = Vec::new();
    for m in order {
        let mut free = true;
        for &l in &lambda {
            if meets(m.character, l)? {
                free = false;
                break;
            }
        }
        if free {
            lambda.push(m.character);
        }
    }

    let mut disjoint = true;
    for (i, &l) in lambda.iter().enumerate() {
        for &lp in &lambda[i + 1..] {
            disjoint &= !meets(l, lp)?;
        }
    }
    let size_bound = eps * eps * (lambda.len() as i64) <= Rational::from_integer(2);
    let mut covered = true;
    for m in &spectrum.members {
        let mut hit = false;
        for &l in &lambda {
            if table.contains(g_amb.sub(m.character, l)?, r4) {
                hit = true;
                break;
            }
        }
        covered &= hit;
    }

    let system = if lambda.is_empty() {
        subgroup_system(&GroupSet::full(g_amb.clone())?, depth)?
    } else {
        bohr_system(&g_amb, &lambda, delta, depth)?
    };
    let inner = system.level(0).intersection(&witness.w)?;
    let inner_table = AnnTable::new(&inner)?;
    let outer = r4 + delta;
    let annihilated = spectrum.members.iter().all(|m| inner_table.contains(m.character, outer));
    let tolerance_dependent = !spectrum.borderline.is_empty();

    Ok(ParsevalCover { lambda, spectrum, system, disjoint, size_bound, covered, annihilated, tolerance_dependent })
}

/// Measured quantities around the density-increment inequality.
#[derive(Clone, Debug, Serialize)]
pub struct IncrementReport {
    pub alpha: String,
    pub tau: String,
    /// `tau - |m_{Z0}(A) - alpha|` and `tau - |m_{Z1}(A) - alpha|`.
    pub precondition_margins: [f64; 2],
    /// `1_{Z0} * (1_A dm_{Z1})` equals `m_{Z1}(A)` on all of `Z0^-`.
    pub constant_on_inner: bool,
    pub l1_deviation: f64,
    pub l1_bound: f64,
    pub l1_holds: bool,
    /// `||F||^2`, `||G||^2`, sup norms, and whether
    /// `||F||^2 <= ||G||^2 + (||F||_inf + ||G||_inf) ||F - G||_1` held exactly.
    pub f_norm_sq: f64,
    pub g_norm_sq: f64,
    pub f_sup: f64,
    pub g_sup: f64,
    pub l2_transfer_holds: bool,
    pub lambda_size: usize,
    pub z_prime_size: usize,
    /// `||1_A * m_{Z'} - alpha||^2` in `L2(m_{Z0})`.
    pub lhs: f64,
    /// `||1_{A∩Z0} * (1_A dm_{Z1}) - alpha^2||^2` in `L2(m_{Z0})`.
    pub rhs_core: f64,
    pub margin: f64,
    /// `eps^2 + tau / eps^2 + delta`, the scale of the unquantified error.
    pub error_scale: f64,
}

fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn frac(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Number of `u` in `left` with `x - u` in `right`.
fn count_reps(g: &AmbientGroup, x: i64, left: &GroupSet, right: &GroupSet) -> Result<usize> {
    let mut n = 0;
    for u in left.iter() {
        if right.contains(g.sub(x, u)?) {
            n += 1;
        }
    }
    Ok(n)
}

pub fn increment_diagnostics(
    a: &GroupSet,
    outer: &ClosedPairWitness,
    inner: &ClosedPairWitness,
    alpha: Rational,
    eps: Rational,
    delta: Rational,
    depth: usize,
) -> Result<IncrementReport> {
    outer.validate()?;
    inner.validate()?;
    if outer.w != inner.z {
        return Err(invalid("the second pair must start where the first ends (W of the first = Z of the second)"));
    }
    a.ambient().ensure_same(outer.z.ambient())?;
    let g = a.ambient().clone();
    let (z0, z1) = (&outer.z, &outer.w);
    let z2 = &inner.w;
    let tau = outer.tau.max(inner.tau);
    let (alpha_b, tau_b) = (big(alpha), big(tau));
    let m0 = frac(a.intersection_len(z0), z0.len());
    let m1 = frac(a.intersection_len(z1), z1.len());
    let gap0 = (&m0 - &alpha_b).abs();
    let gap1 = (&m1 - &alpha_b).abs();
    if gap0 > tau_b || gap1 > tau_b {
        return Err(invalid(format!(
            "density precondition fails: |m_Z0(A) - alpha| = {}, |m_Z1(A) - alpha| = {}, tau = {tau}",
            to_f64(&gap0),
            to_f64(&gap1)
        )));
    }

    let a0 = a.intersection(z0)?;
    let a1 = a.intersection(z1)?;
    let n0 = z0.len();
    let n1 = BigInt::from(z1.len());
    let mut constant_on_inner = true;
    let mut l1 = BigRational::zero();
    let (mut f_sq, mut g_sq) = (BigRational::zero(), BigRational::zero());
    let (mut f_sup, mut g_sup) = (BigRational::zero(), BigRational::zero());
    let alpha_sq = &alpha_b * &alpha_b;
    for z in z0.iter() {
        // h(z) = c'(z)/|Z1|, F = c(z)/|Z1| - alpha^2, G = (c(z) - alpha c'(z))/|Z1|.
        let c = BigInt::from(count_reps(&g, z, &a0, &a1)?);
        let cp = BigInt::from(count_reps(&g, z, z0, &a1)?);
        let h = BigRational::new(cp.clone(), n1.clone());
        if outer.z_minus.contains(z) && h != m1 {
            constant_on_inner = false;
        }
        l1 += (&h - &alpha_b).abs();
        let fv = BigRational::new(c.clone(), n1.clone()) - &alpha_sq;
        let gv = (BigRational::from_integer(c) - &alpha_b * BigRational::from_integer(cp)) / BigRational::from_integer(n1.clone());
        f_sq += &fv * &fv;
        g_sq += &gv * &gv;
        f_sup = f_sup.max(fv.abs());
        g_sup = g_sup.max(gv.abs());
    }
    let n0b = BigRational::from_integer(BigInt::from(n0));
    l1 /= &n0b;
    f_sq /= &n0b;
    g_sq /= &n0b;
    let outside = frac(n0 - outer.z_minus.len(), n0);
    let one = BigRational::one();
    let l1_bound = gap1.clone() + alpha_b.clone().max(&one - &alpha_b) * outside;
    let l1_holds = l1 <= l1_bound;
    let l2_transfer_holds = f_sq <= &g_sq + (&f_sup + &g_sup) * &alpha_b * &l1;

    let pars = parseval_spectrum_cover(&DenseFunction::indicator(a)?, inner, eps, delta, depth)?;
    let z_prime = z2.intersection(pars.system.level(0))?;
    let mut lhs = BigRational::zero();
    let np = BigInt::from(z_prime.len());
    for z in z0.iter() {
        let v = BigRational::new(BigInt::from(count_reps(&g, z, &z_prime, a)?), np.clone()) - &alpha_b;
        lhs += &v * &v;
    }
    lhs /= &n0b;
    let (lhs_f, core_f) = (to_f64(&lhs), to_f64(&f_sq));
    let e = rational_f64(eps);
    Ok(IncrementReport {
        alpha: alpha.to_string(),
        tau: tau.to_string(),
        precondition_margins: [to_f64(&(&tau_b - &gap0)), to_f64(&(&tau_b - &gap1))],
        constant_on_inner,
        l1_deviation: to_f64(&l1),
        l1_bound: to_f64(&l1_bound),
        l1_holds,
        f_norm_sq: core_f,
        g_norm_sq: to_f64(&g_sq),
        f_sup: to_f64(&f_sup),
        g_sup: to_f64(&g_sup),
        l2_transfer_holds,
        lambda_size: pars.lambda.len(),
        z_prime_size: z_prime.len(),
        lhs: lhs_f,
        rhs_core: core_f,
        margin: lhs_f - core_f,
        error_scale: e * e + rational_f64(tau) / (e * e) + rational_f64(delta),
    })
}
