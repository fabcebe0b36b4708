use serde::{Deserialize, Serialize};

use crate::bohr::{enumerate_exact, BohrSpec};
use crate::error::Result;
use crate::intset::IntSet;
use crate::patterns::Configuration;
use crate::rational::{self, int, rat, Rational};
use crate::reduce::Limits;

use super::constants::{ConstantTable, Mode, Overrides};

/// `n ↦ base + scale·n`, from local coordinates to those of the original set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    pub base: i64,
    pub scale: i64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { base: 0, scale: 1 };

    pub fn apply(&self, n: i64) -> i64 {
        self.base + self.scale * n
    }

    /// `self ∘ (n ↦ base + scale·n)`.
    pub fn then(&self, base: i64, scale: i64) -> AffineMap {
        AffineMap {
            base: self.apply(base),
            scale: self.scale * scale,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exhaustion {
    /// `|Λ_s|` fell to the smallness threshold.
    Small,
    /// No local U² norm reached its threshold.
    StalledU2,
    /// The Fourier step did not apply or reached neither conclusion.
    StalledFourier,
    /// A translate of some `Λ_i` was found but the gain fell short.
    StalledTranslate,
    /// A translate of the new Bohr set was found but the gain fell short.
    StalledBohr,
}

impl Exhaustion {
    fn threshold<'a>(&self, t: &'a ConstantTable) -> &'a Rational {
        match self {
            Exhaustion::Small => &t.small,
            Exhaustion::StalledU2 => &t.u2,
            Exhaustion::StalledFourier => &t.eta_sq,
            Exhaustion::StalledTranslate => &t.inc4,
            Exhaustion::StalledBohr => &t.inc5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Certificate {
    /// A nontrivial configuration, in the original coordinates.
    Found {
        a: i64,
        ns: Vec<i64>,
        elements: Vec<i64>,
    },
    /// The set restricted to `base + scale·Λ'` inside the parent Bohr set
    /// has density `new_delta >= threshold > old_delta`.
    DensityIncrement {
        step_case: u8,
        parent: BohrSpec,
        parent_map: AffineMap,
        spec: BohrSpec,
        base: i64,
        scale: i64,
        map: AffineMap,
        #[serde(with = "rational::pair")]
        old_delta: Rational,
        #[serde(with = "rational::pair")]
        new_delta: Rational,
        #[serde(with = "rational::pair")]
        threshold: Rational,
        hits: usize,
        size: usize,
        constants: ConstantTable,
    },
    Exhausted {
        reason: Exhaustion,
        spec: BohrSpec,
        map: AffineMap,
        #[serde(with = "rational::pair")]
        delta: Rational,
        #[serde(with = "rational::pair_vec")]
        cs: Vec<Rational>,
        #[serde(with = "rational::pair")]
        measured: Rational,
        #[serde(with = "rational::pair")]
        threshold: Rational,
        detail: String,
        constants: ConstantTable,
    },
}

impl Certificate {
    pub fn found(c: &Configuration) -> Self {
        Certificate::Found {
            a: c.a,
            ns: c.ns.clone(),
            elements: c.elements(),
        }
    }
}

/// `|{n ∈ Λ : map(n) ∈ A}|` and `|Λ|` by exact membership.
fn exact_density(
    spec: &BohrSpec,
    map: &AffineMap,
    set: &IntSet,
    limits: &Limits,
) -> Result<(usize, usize, Vec<i64>)> {
    let elems = enumerate_exact(spec, limits)?;
    let hits = elems.iter().filter(|&&n| set.contains(map.apply(n))).count();
    Ok((hits, elems.len(), elems))
}

/// A table is sound if it equals the closed forms for its `(s, d, δ)`,
/// apart from the names it declares as overridden.
fn table_is_sound(t: &ConstantTable, d: usize, delta: &Rational) -> bool {
    if t.d != d || &t.delta != delta {
        return false;
    }
    match t.mode {
        Mode::Faithful => t.overrides.is_empty() && *t == ConstantTable::faithful(t.s, d, delta),
        Mode::Practical => {
            let map = t
                .overrides
                .iter()
                .map(|name| (name.clone(), field(t, name)))
                .collect();
            match Overrides::new(map) {
                Ok(o) => *t == ConstantTable::practical(t.s, d, delta, &o),
                Err(_) => false,
            }
        }
    }
}

fn field(t: &ConstantTable, name: &str) -> Rational {
    match name {
        "x1" => t.x1.clone(),
        "xi" => t.xi.clone(),
        "small" => t.small.clone(),
        "local_factor" => t.local_factor.clone(),
        "u2" => t.u2.clone(),
        "eta_sq" => t.eta_sq.clone(),
        "inc4" => t.inc4.clone(),
        "inc5" => t.inc5.clone(),
        "c_prime" => t.c_prime.clone(),
        "shrink" => t.shrink.clone(),
        "k_bound" => t.k_bound.clone(),
        "d_bound" => t.d_bound.clone(),
        _ => rational::zero(),
    }
}

/// Recheck a certificate against the original set, recomputing every
/// density by exact counting and every threshold from its constant table.
pub fn recheck_certificate(cert: &Certificate, set: &IntSet, limits: &Limits) -> Result<bool> {
    match cert {
        Certificate::Found { a, ns, elements } => {
            let c = Configuration::new(*a, ns.clone());
            Ok(c.ns.len() >= 2 && c.is_nontrivial() && &c.elements() == elements && c.lies_in(set))
        }
        Certificate::DensityIncrement {
            step_case,
            parent,
            parent_map,
            spec,
            base,
            scale,
            map,
            old_delta,
            new_delta,
            threshold,
            hits,
            size,
            constants,
        } => {
            let (ph, ps, parent_elems) = exact_density(parent, parent_map, set, limits)?;
            if ps == 0 || &rat(ph as i64, ps as i64) != old_delta {
                return Ok(false);
            }
            if !table_is_sound(constants, parent.dimension(), old_delta) {
                return Ok(false);
            }
            let expected = match step_case {
                3 => &constants.local_factor * old_delta,
                4 => old_delta + &constants.inc4,
                5 => old_delta + &constants.inc5,
                _ => return Ok(false),
            };
            let dims_ok = match step_case {
                5 => spec.dimension() == parent.dimension() + 1 && spec.theta[..parent.dimension()] == parent.theta[..],
                _ => spec.theta == parent.theta,
            };
            let scale_ok = match step_case {
                3 => *scale == 2,
                _ => *scale == 1,
            };
            if !dims_ok || !scale_ok || *map != parent_map.then(*base, *scale) {
                return Ok(false);
            }
            let (h, n, elems) = exact_density(spec, map, set, limits)?;
            let parent_set = IntSet::from_sorted(parent_elems);
            let inside = elems.iter().all(|&x| parent_set.contains(base + scale * x));
            Ok(inside
                && n > 0
                && h == *hits
                && n == *size
                && new_delta == &rat(h as i64, n as i64)
                && threshold == &expected
                && new_delta >= threshold
                && threshold > old_delta)
        }
        Certificate::Exhausted {
            reason,
            spec,
            map,
            delta,
            cs,
            measured,
            threshold,
            constants,
            ..
        } => {
            let (h, n, _) = exact_density(spec, map, set, limits)?;
            if n == 0 || &rat(h as i64, n as i64) != delta {
                return Ok(false);
            }
            if !table_is_sound(constants, spec.dimension(), delta) {
                return Ok(false);
            }
            if threshold != reason.threshold(constants) {
                return Ok(false);
            }
            match reason {
                Exhaustion::Small => {
                    let xs = constants.xs();
                    if cs.len() != xs.len() {
                        return Ok(false);
                    }
                    let two = int(2);
                    let mut cur = spec.clone();
                    for (c, x) in cs.iter().zip(&xs) {
                        if c < x || c > &(x * &two) {
                            return Ok(false);
                        }
                        cur = cur.dilate(c)?;
                    }
                    let last = enumerate_exact(&cur, limits)?.len();
                    Ok(measured == &int(last as i64) && measured <= threshold)
                }
                _ => Ok(measured < threshold),
            }
        }
    }
}
