//! Bohr sets over the integers with rational frequencies.
//!
//! `Λ_{θ,ε,M}` is the set of `n` with `|n| <= M` and `‖n θ_j‖ <= ε` for every
//! frequency. Everything here is exact: frequencies, radius and length are
//! rationals, and regularity is decided by walking the finitely many
//! dilation factors at which membership changes.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intset::IntSet;
use crate::rational::{self, rat, Rational};
use crate::reduce::Limits;

const CHUNK: i64 = 1 << 15;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BohrSpec {
    #[serde(with = "rational::pair_vec")]
    pub theta: Vec<Rational>,
    #[serde(with = "rational::pair")]
    pub eps: Rational,
    #[serde(rename = "M", with = "rational::pair")]
    pub m: Rational,
}

impl BohrSpec {
    /// A validated spec: `d >= 1`, `0 < eps <= 1/2`, `M >= 1`.
    pub fn new(theta: Vec<Rational>, eps: Rational, m: Rational) -> Result<Self> {
        let spec = BohrSpec { theta, eps, m };
        spec.validate()?;
        Ok(spec)
    }

    /// `Λ_{1, 1/2, M}`, the symmetric interval `[-⌊M⌋, ⌊M⌋]`.
    pub fn interval(m: Rational) -> Result<Self> {
        Self::new(vec![rational::one()], rational::half(), m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        if !self.eps.is_positive() || self.eps > rational::half() {
            return Err(Error::InvalidSpec(format!("eps = {} outside (0, 1/2]", self.eps)));
        }
        if self.m < rational::one() {
            return Err(Error::InvalidSpec(format!("M = {} below 1", self.m)));
        }
        for t in &self.theta {
            if t.denom().to_i64().is_none() {
                return Err(Error::InvalidSpec(format!(
                    "frequency {t} has a denominator wider than 64 bits"
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.theta.len()
    }

    /// Radius at least 1/2 makes every frequency condition vacuous; length
    /// below 1 leaves only `{0}`. Both arise from dilation and are allowed
    /// for analysis.
    pub fn is_degenerate(&self) -> bool {
        self.eps > rational::half() || self.m < rational::one()
    }

    /// `cΛ = Λ_{θ, cε, cM}`.
    pub fn dilate(&self, c: &Rational) -> Result<BohrSpec> {
        if !c.is_positive() {
            return Err(Error::Invalid(format!("dilation factor {c} must be positive")));
        }
        Ok(BohrSpec {
            theta: self.theta.clone(),
            eps: &self.eps * c,
            m: &self.m * c,
        })
    }

    /// Same radius and length with one more frequency.
    pub fn with_frequency(&self, y: Rational) -> BohrSpec {
        let mut theta = self.theta.clone();
        theta.push(y);
        BohrSpec {
            theta,
            eps: self.eps.clone(),
            m: self.m.clone(),
        }
    }

    /// Exact membership test.
    pub fn contains(&self, n: i64) -> bool {
        let nn = rational::int(n.abs());
        if nn > self.m {
            return false;
        }
        self.theta
            .iter()
            .all(|t| dist_to_int(&(t * rational::int(n))) <= self.eps)
    }

    /// Smallest dilation factor `x` with `n ∈ xΛ`:
    /// `max(|n|/M, max_j ‖nθ_j‖/ε)`.
    pub fn radius_of(&self, n: i64) -> Rational {
        let mut r = rational::int(n.abs()) / &self.m;
        for t in &self.theta {
            let v = dist_to_int(&(t * rational::int(n))) / &self.eps;
            if v > r {
                r = v;
            }
        }
        r
    }

    pub fn enumerate(&self, limits: &Limits) -> Result<BohrSet> {
        let mem = Membership::new(self, &rational::one())?;
        let top = mem.top(limits)?;
        let positives: Vec<i64> = scan_chunks(top, |lo, hi| {
            (lo..=hi).filter(|&n| n > 0 && mem.contains(n)).collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
        let mut elements = Vec::with_capacity(2 * positives.len() + 1);
        elements.extend(positives.iter().rev().map(|&n| -n));
        elements.push(0);
        elements.extend(positives);
        Ok(BohrSet {
            spec: self.clone(),
            set: IntSet::from_sorted(elements),
        })
    }
}

fn dist_to_int(x: &Rational) -> Rational {
    let f = x - x.floor();
    let g = rational::one() - &f;
    if f < g {
        f
    } else {
        g
    }
}

fn scan_chunks<T, F>(top: i64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(i64, i64) -> T + Sync,
{
    let nchunks = top / CHUNK + 1;
    (0..nchunks)
        .into_par_iter()
        .map(|k| {
            let lo = k * CHUNK;
            let hi = (lo + CHUNK - 1).min(top);
            f(lo, hi)
        })
        .collect()
}

/// Integer-only membership for `scale·Λ`: `|n| <= ⌊scale·M⌋` and, per
/// frequency `p/q`, `min(np mod q, q - np mod q) <= ⌊scale·ε·q⌋`.
#[derive(Clone, Debug)]
struct Membership {
    m_floor: i64,
    freqs: Vec<(i128, i128, i128)>,
}

impl Membership {
    fn new(spec: &BohrSpec, scale: &Rational) -> Result<Self> {
        let m = &spec.m * scale;
        let m_floor = rational::floor(&m)
            .to_i64()
            .ok_or(Error::Overflow("Bohr length"))?;
        let eps = &spec.eps * scale;
        let mut freqs = Vec::with_capacity(spec.theta.len());
        for t in &spec.theta {
            let q = t
                .denom()
                .to_i128()
                .ok_or_else(|| Error::InvalidSpec(format!("frequency {t} too wide")))?;
            let p = t.numer().mod_floor(t.denom()).to_i128().unwrap_or(0);
            let thr = rational::floor(&(&eps * Rational::from_integer(BigInt::from(q))));
            // Any residue is within q/2 of an integer multiple of q.
            if thr >= BigInt::from(q / 2) {
                continue;
            }
            freqs.push((p, q, thr.to_i128().unwrap_or(0)));
        }
        Ok(Membership { m_floor, freqs })
    }

    fn top(&self, limits: &Limits) -> Result<i64> {
        let candidates = 2 * (self.m_floor.max(0) as u128) + 1;
        if candidates > limits.enumeration as u128 {
            return Err(Error::Capacity {
                what: "Bohr set enumeration",
                needed: candidates,
                limit: limits.enumeration as u128,
            });
        }
        Ok(self.m_floor.max(0))
    }

    #[inline]
    fn contains(&self, n: i64) -> bool {
        if self.m_floor < 0 || n.unsigned_abs() > self.m_floor as u64 {
            return false;
        }
        let n = n as i128;
        self.freqs.iter().all(|&(p, q, thr)| {
            let r = (n * p).rem_euclid(q);
            r.min(q - r) <= thr
        })
    }
}

/// A materialized Bohr set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BohrSet {
    pub spec: BohrSpec,
    set: IntSet,
}

impl BohrSet {
    pub fn elements(&self) -> &[i64] {
        self.set.as_slice()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    #[inline]
    pub fn contains(&self, n: i64) -> bool {
        self.set.contains(n)
    }

    pub fn max_abs(&self) -> i64 {
        self.set.max().unwrap_or(0)
    }

    pub fn as_intset(&self) -> &IntSet {
        &self.set
    }

    /// Whether `base + scale·Λ' ⊆ self` for the elements given.
    pub fn contains_image(&self, base: i64, scale: i64, other: &[i64]) -> bool {
        other.iter().all(|&n| self.contains(base + scale * n))
    }
}

/// Elements of `Λ` found by testing every `|n| <= M` against the exact
/// rational predicate. Slower than `enumerate` and shares no code with it.
pub fn enumerate_exact(spec: &BohrSpec, limits: &Limits) -> Result<Vec<i64>> {
    let top = rational::floor(&spec.m)
        .to_i64()
        .ok_or(Error::Overflow("Bohr length"))?;
    if top < 0 {
        return Ok(Vec::new());
    }
    let candidates = 2 * top as u128 + 1;
    if candidates > limits.enumeration as u128 {
        return Err(Error::Capacity {
            what: "exact Bohr set enumeration",
            needed: candidates,
            limit: limits.enumeration as u128,
        });
    }
    Ok((-top..=top)
        .into_par_iter()
        .filter(|&n| spec.contains(n))
        .collect())
}

/// Pointwise doubling `2·X = {2x : x ∈ X}`.
pub fn dilate_elements(xs: &[i64]) -> Vec<i64> {
    xs.iter().map(|&x| 2 * x).collect()
}

/// `|A ∩ (base + Λ')| / |Λ'|`.
pub fn density_on(a: &IntSet, base: i64, set: &BohrSet) -> Result<Rational> {
    if set.is_empty() {
        return Err(Error::EmptySet("density_on: translate set"));
    }
    let hits = a.count_in_translate(base, set.elements());
    Ok(rat(hits as i64, set.len() as i64))
}

/// Exact verdict on the regularity window `1 ± 100d|c|`, `|c| <= 1/100d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub verdict: bool,
    /// Values of `c` in the window where `|(1+c)Λ|` changes.
    #[serde(with = "rational::pair_vec")]
    pub breakpoints: Vec<Rational>,
    /// Ratio `|(1+c)Λ|/|Λ|` at the point of least slack.
    #[serde(with = "rational::pair")]
    pub worst_ratio: Rational,
    #[serde(with = "rational::pair_opt")]
    pub witness_c: Option<Rational>,
    pub size: u64,
    pub dimension: usize,
}

/// Sorted radii `radius_of(n)` of all integers in a shell, with everything
/// below the shell lumped into one count.
#[derive(Clone, Debug)]
struct RadiusProfile {
    lo: Rational,
    below: u64,
    levels: Vec<(Rational, u64)>,
    prefix: Vec<u64>,
}

impl RadiusProfile {
    fn build(spec: &BohrSpec, lo: &Rational, hi: &Rational, limits: &Limits) -> Result<Self> {
        let inner = Membership::new(spec, lo)?;
        let outer = Membership::new(spec, hi)?;
        let top = outer.top(limits)?;
        let parts = scan_chunks(top, |a, b| {
            let mut below = 0u64;
            let mut shell = Vec::new();
            for n in a..=b {
                let w = if n == 0 { 1 } else { 2 };
                if inner.contains(n) {
                    below += w;
                } else if outer.contains(n) {
                    shell.push((spec.radius_of(n), w));
                }
            }
            (below, shell)
        });
        let mut below = 0;
        let mut shell = Vec::new();
        for (b, s) in parts {
            below += b;
            shell.extend(s);
        }
        shell.sort_by(|x, y| x.0.cmp(&y.0));
        let mut levels: Vec<(Rational, u64)> = Vec::new();
        for (t, w) in shell {
            match levels.last_mut() {
                Some(last) if last.0 == t => last.1 += w,
                _ => levels.push((t, w)),
            }
        }
        let mut prefix = Vec::with_capacity(levels.len());
        let mut acc = 0;
        for (_, w) in &levels {
            acc += w;
            prefix.push(acc);
        }
        Ok(RadiusProfile {
            lo: lo.clone(),
            below,
            levels,
            prefix,
        })
    }

    /// `#{n : radius(n) <= x}` for `x >= lo`.
    fn count_le(&self, x: &Rational) -> u64 {
        debug_assert!(x >= &self.lo);
        let k = self.levels.partition_point(|(t, _)| t <= x);
        self.below + if k == 0 { 0 } else { self.prefix[k - 1] }
    }

    fn certify(&self, alpha: &Rational, d: usize) -> RegularityCertificate {
        let w = rat(1, 100 * d as i64);
        let one = rational::one();
        let size = self.count_le(alpha);
        let lo_t = alpha * (&one - &w);
        let hi_t = alpha * (&one + &w);

        // Breakpoints inside (-w, w], each with the count just after it.
        let start = self.levels.partition_point(|(t, _)| t <= &lo_t);
        let end = self.levels.partition_point(|(t, _)| t <= &hi_t);
        let breakpoints: Vec<Rational> = self.levels[start..end]
            .iter()
            .map(|(t, _)| t / alpha - &one)
            .collect();

        let mut points: Vec<Rational> = Vec::with_capacity(breakpoints.len() + 3);
        points.push(-w.clone());
        points.extend(breakpoints.iter().cloned());
        points.push(rational::zero());
        points.push(w.clone());
        points.sort();
        points.dedup();

        let deficit = |c: &Rational, r: &Rational| -> Rational {
            let slack = c.abs() / &w;
            let over = r - (&one + &slack);
            let under = (&one - &slack) - r;
            if over > under {
                over
            } else {
                under
            }
        };

        let mut worst: Option<(Rational, Rational)> = None; // (deficit, ratio)
        let mut witness: Option<Rational> = None;
        let mut violated = false;
        let mut consider = |def: Rational, ratio: &Rational, witness_at: &dyn Fn() -> Rational| {
            let replace = match &worst {
                None => true,
                Some((d0, _)) => def > *d0,
            };
            if def.is_positive() && !violated {
                violated = true;
                witness = Some(witness_at());
            }
            if replace {
                worst = Some((def, ratio.clone()));
            }
        };

        for (k, p) in points.iter().enumerate() {
            let r = Rational::new(
                BigInt::from(self.count_le(&(alpha * (&one + p)))),
                BigInt::from(size),
            );
            let closed = deficit(p, &r);
            consider(closed, &r, &|| p.clone());
            if let Some(next) = points.get(k + 1) {
                let limit = deficit(next, &r);
                if limit.is_positive() {
                    // Walk toward `next` until the linear deficit turns positive.
                    let find = || {
                        let mut c = (p + next) / rational::int(2);
                        for _ in 0..256 {
                            if deficit(&c, &r).is_positive() {
                                break;
                            }
                            c = (&c + next) / rational::int(2);
                        }
                        c
                    };
                    consider(limit, &r, &find);
                }
            }
        }
        let (_, worst_ratio) = worst.unwrap_or((rational::zero(), rational::one()));
        RegularityCertificate {
            verdict: !violated,
            breakpoints,
            worst_ratio,
            witness_c: witness,
            size,
            dimension: d,
        }
    }
}

/// Decide regularity of `spec` exactly.
pub fn regularity_certificate(spec: &BohrSpec, limits: &Limits) -> Result<RegularityCertificate> {
    let d = spec.dimension();
    let w = rat(1, 100 * d as i64);
    let one = rational::one();
    let profile = RadiusProfile::build(spec, &(&one - &w), &(&one + &w), limits)?;
    Ok(profile.certify(&one, d))
}

/// Find `α ∈ [1/2, 1]` with `αΛ` regular, trying candidates in increasing
/// order: `1/2`, the midpoints between consecutive radii, and `1`.
pub fn find_regular_alpha(
    spec: &BohrSpec,
    limits: &Limits,
) -> Result<(Rational, RegularityCertificate)> {
    let d = spec.dimension();
    let w = rat(1, 100 * d as i64);
    let one = rational::one();
    let half = rational::half();
    let profile = RadiusProfile::build(spec, &(&half * (&one - &w)), &(&one + &w), limits)?;

    let mut marks = vec![half.clone()];
    marks.extend(
        profile
            .levels
            .iter()
            .map(|(t, _)| t)
            .filter(|t| **t > half && **t < one)
            .cloned(),
    );
    marks.push(one.clone());
    let is_radius = |a: &Rational| {
        profile
            .levels
            .binary_search_by(|(t, _)| t.cmp(a))
            .is_ok()
    };

    let mut candidates = Vec::with_capacity(2 * marks.len());
    for (k, m) in marks.iter().enumerate() {
        if k > 0 {
            candidates.push((&marks[k - 1] + m) / rational::int(2));
        }
        if !is_radius(m) {
            candidates.push(m.clone());
        }
    }
    candidates.sort();
    candidates.dedup();

    for alpha in candidates {
        let cert = profile.certify(&alpha, d);
        if cert.verdict {
            return Ok((alpha, cert));
        }
    }
    Err(Error::NotFound(format!(
        "no regular dilation αΛ with α in [1/2, 1] for {:?}",
        spec
    )))
}

/// Pick `c ∈ [x, 2x]` with `cΛ` regular.
pub fn regular_dilation(
    spec: &BohrSpec,
    x: &Rational,
    limits: &Limits,
) -> Result<(Rational, BohrSpec, RegularityCertificate)> {
    let two_x = x * rational::int(2);
    let wide = spec.dilate(&two_x)?;
    let (alpha, cert) = find_regular_alpha(&wide, limits)?;
    let c = &two_x * &alpha;
    let out = spec.dilate(&c)?;
    Ok((c, out, cert))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(theta: &[(i64, i64)], eps: (i64, i64), m: (i64, i64)) -> BohrSpec {
        BohrSpec {
            theta: theta.iter().map(|&(a, b)| rat(a, b)).collect(),
            eps: rat(eps.0, eps.1),
            m: rat(m.0, m.1),
        }
    }

    #[test]
    fn parity_example_membership() {
        let s = spec(&[(1, 2)], (499, 1000), (50, 1));
        assert!(s.contains(4));
        assert!(!s.contains(3));
        assert!(s.contains(0));
    }

    #[test]
    fn small_examples_enumerate() {
        let l = BohrSpec::interval(rational::int(100)).unwrap();
        let set = l.enumerate(&Limits::default()).unwrap();
        assert_eq!(set.elements(), (-100..=100).collect::<Vec<_>>().as_slice());

        let s = spec(&[(1, 2)], (499, 1000), (50, 1));
        let set = s.enumerate(&Limits::default()).unwrap();
        assert_eq!(set.len(), 51);
        assert!(set.elements().iter().all(|n| n % 2 == 0));

        let s = spec(&[(1, 3)], (1, 5), (1, 1));
        assert_eq!(s.enumerate(&Limits::default()).unwrap().elements(), &[0]);
    }

    #[test]
    fn fast_membership_matches_exact() {
        let specs = [
            spec(&[(1, 2)], (499, 1000), (50, 1)),
            spec(&[(2, 7), (-5, 11)], (1, 4), (301, 2)),
            spec(&[(13, 97)], (1, 10), (400, 3)),
            spec(&[(3, 5)], (1, 10), (2, 5)),
        ];
        for s in &specs {
            let set = s.enumerate(&Limits::default()).unwrap();
            for n in -210..=210 {
                assert_eq!(set.contains(n), s.contains(n), "{s:?} n={n}");
            }
        }
    }

    #[test]
    fn dilation_composes_exactly() {
        let s = spec(&[(1, 2)], (499, 1000), (50, 1));
        let a = s.dilate(&rat(1, 2)).unwrap().dilate(&rat(1, 2)).unwrap();
        assert_eq!(a, s.dilate(&rat(1, 4)).unwrap());
        assert_eq!(s.dilate(&rational::one()).unwrap(), s);
        let big = s.dilate(&rat(101, 100)).unwrap();
        assert_eq!(big.eps, rat(50399, 100000));
        assert!(big.is_degenerate());
        assert!(s.dilate(&rational::zero()).is_err());
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(BohrSpec::new(vec![], rat(1, 4), rational::int(3)).is_err());
        assert!(BohrSpec::new(vec![rat(1, 2)], rat(3, 4), rational::int(3)).is_err());
        assert!(BohrSpec::new(vec![rat(1, 2)], rat(0, 1), rational::int(3)).is_err());
        assert!(BohrSpec::new(vec![rat(1, 2)], rat(1, 4), rat(1, 2)).is_err());
    }

    #[test]
    fn enumeration_cap_trips() {
        let l = BohrSpec::interval(rational::int(1000)).unwrap();
        let limits = Limits {
            enumeration: 100,
            ..Limits::default()
        };
        assert!(matches!(l.enumerate(&limits), Err(Error::Capacity { .. })));
    }

    #[test]
    fn density_examples() {
        let evens: IntSet = (-10..=10).filter(|n| n % 2 == 0).collect();
        let small = BohrSet {
            spec: spec(&[(1, 1)], (1, 2), (2, 1)),
            set: IntSet::new(vec![-2, 0, 2]),
        };
        assert_eq!(density_on(&evens, 0, &small).unwrap(), rational::one());
        assert_eq!(density_on(&evens, 1, &small).unwrap(), rational::zero());
        assert_eq!(density_on(&IntSet::default(), 0, &small).unwrap(), rational::zero());
    }

    #[test]
    fn parity_pathology_is_not_regular() {
        let s = spec(&[(1, 2)], (499, 1000), (50, 1));
        let cert = regularity_certificate(&s, &Limits::default()).unwrap();
        assert!(!cert.verdict);
        assert!(cert.witness_c.is_some());
    }

    #[test]
    fn half_integer_interval_is_regular() {
        let s = BohrSpec::interval(rat(201, 2)).unwrap();
        let cert = regularity_certificate(&s, &Limits::default()).unwrap();
        assert!(cert.verdict, "{cert:?}");
    }
}
