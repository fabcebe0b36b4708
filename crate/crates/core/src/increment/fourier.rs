use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bohr::{BohrSet, BohrSpec};
use crate::error::{Error, Result};
use crate::function::BoundedFunction;
use crate::gowers::{fourier_sup, fourier_sups, FourierGrid, NORM_TOL};
use crate::rational::{self, int, powi, Rational};
use crate::reduce::{pairwise_sum, Limits};

/// How many times a quantized frequency is refined on a 4x finer grid
/// before giving up.
const REFINEMENTS: u32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum FourierIncrement {
    /// `E_{n₁∈Λ₁} f(a+n₁) >= η³/128` with `a + Λ₁ ⊆ Λ`.
    Translate {
        a: i64,
        #[serde(with = "rational::real12")]
        value: f64,
        #[serde(with = "rational::real12")]
        threshold: f64,
    },
    /// `E_{n'∈Λ'} f(base+n') >= η/16` on the `(d+1)`-dimensional `Λ'`.
    Bohr {
        spec: BohrSpec,
        base: i64,
        #[serde(with = "rational::real12")]
        value: f64,
        #[serde(with = "rational::real12")]
        threshold: f64,
        /// Point whose Fourier peak supplied the new frequency.
        source: i64,
        #[serde(with = "rational::pair")]
        y: Rational,
        #[serde(with = "rational::real12")]
        y_error: f64,
        grid: usize,
    },
    HypothesisNotMet { reason: String },
    /// Neither conclusion was reached on the measured data.
    Violation {
        #[serde(with = "rational::real12")]
        best_translate: f64,
        #[serde(with = "rational::real12")]
        best_bohr: f64,
    },
}

/// Bounds on `c₁` and `c'` for a given `η`: `2^{-15}η³/d` and `2^{-13}η/d`.
pub fn fourier_bounds(eta: f64, d: usize) -> Result<(Rational, Rational)> {
    let eta_q = Rational::from_float(eta)
        .ok_or_else(|| Error::Invalid(format!("eta = {eta} is not finite")))?;
    let d = int(d as i64);
    let c1 = powi(&int(2), -15) * powi(&eta_q, 3) / &d;
    let cp = powi(&int(2), -13) * eta_q / d;
    Ok((c1, cp))
}

fn translate_means(f: &BoundedFunction, l: &BohrSet, inner: &BohrSet) -> Vec<Option<f64>> {
    let dense = f.dense();
    let k = inner.len() as f64;
    l.elements()
        .par_iter()
        .map(|&a| {
            if !inner.elements().iter().all(|&n| l.contains(a + n)) {
                return None;
            }
            let vals: Vec<Complex64> = inner.elements().iter().map(|&n| dense.get(a + n)).collect();
            Some(pairwise_sum(&vals).re / k)
        })
        .collect()
}

/// Best translate `b + inner ⊆ l` by mean of `f`; ties go to the smaller `b`.
pub(crate) fn best_translate(
    f: &BoundedFunction,
    l: &BohrSet,
    inner: &BohrSet,
) -> Option<(i64, f64)> {
    if inner.is_empty() {
        return None;
    }
    let means = translate_means(f, l, inner);
    let mut best: Option<(i64, f64)> = None;
    for (&b, m) in l.elements().iter().zip(&means) {
        if let Some(m) = *m {
            if best.map_or(true, |(_, v)| m > v) {
                best = Some((b, m));
            }
        }
    }
    best
}

/// Turn a large averaged Fourier coefficient of the mean-zero `f` on
/// `(Λ, Λ₁)`, `Λ₁ = c₁Λ`, into a density increment: either on a translate
/// of `Λ₁`, or on a translate of `Λ' = c'·Λ₁` with one extra frequency.
///
/// The extra frequency is the certified grid maximizer, so the Case 2
/// value is measured on the quantized set. With `enforce` off the bounds on
/// `c₁` and `c'` are not checked.
#[allow(clippy::too_many_arguments)]
pub fn fourier_increment(
    f: &BoundedFunction,
    l: &BohrSet,
    l1: &BohrSet,
    c1: &Rational,
    eta: f64,
    c_prime: &Rational,
    grid: usize,
    enforce: bool,
    limits: &Limits,
) -> Result<FourierIncrement> {
    let not_met = |reason: String| Ok(FourierIncrement::HypothesisNotMet { reason });
    if l.is_empty() || l1.is_empty() {
        return Err(Error::EmptySet("fourier_increment Bohr set"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return not_met(format!("eta = {eta} outside (0, 1)"));
    }
    let vals: Vec<Complex64> = l.elements().iter().map(|&a| f.eval(a)).collect();
    let mean = pairwise_sum(&vals) / l.len() as f64;
    if mean.norm() > NORM_TOL {
        return not_met(format!("mean of f over Λ is {mean}, not 0"));
    }
    if enforce {
        let (c1_max, cp_max) = fourier_bounds(eta, l.spec.dimension())?;
        if c1 > &c1_max {
            return not_met(format!("c1 = {c1} exceeds 2^-15 η³/d"));
        }
        if c_prime > &cp_max {
            return not_met(format!("c' = {c_prime} exceeds 2^-13 η/d"));
        }
    }
    let grid = grid.max(FourierGrid::required_points(l1));
    let sups = fourier_sups(f, l.elements(), l1, grid)?;
    let squares: Vec<f64> = sups
        .iter()
        .map(|s| {
            let u = (s.value + s.certified_error).min(1.0);
            u * u
        })
        .collect();
    let upper = crate::reduce::pairwise_sum_real(&squares) / l.len() as f64;
    if upper + NORM_TOL < eta * eta {
        return not_met(format!(
            "averaged squared Fourier supremum is at most {upper}, below η² = {}",
            eta * eta
        ));
    }

    let t1 = eta.powi(3) / 128.0;
    let means = translate_means(f, l, l1);
    let mut top: Option<(i64, f64)> = None;
    for (&a, m) in l.elements().iter().zip(&means) {
        if let Some(m) = *m {
            if top.map_or(true, |(_, v)| m > v) {
                top = Some((a, m));
            }
        }
    }
    if let Some((a, m)) = top {
        if m >= t1 {
            return Ok(FourierIncrement::Translate {
                a,
                value: rational::real12::round(m),
                threshold: rational::real12::round(t1),
            });
        }
    }

    let mut source: Option<(i64, f64)> = None;
    for ((&a, m), s) in l.elements().iter().zip(&means).zip(&sups) {
        match m {
            Some(m) if *m > -eta / 32.0 => {
                if source.map_or(true, |(_, v)| s.value > v) {
                    source = Some((a, s.value));
                }
            }
            _ => {}
        }
    }
    let t2 = eta / 16.0;
    let mut best_bohr = f64::NEG_INFINITY;
    if let Some((a, _)) = source {
        let mut g = grid;
        for _ in 0..=REFINEMENTS {
            let peak = fourier_sup(f, a, l1, g)?;
            let spec = l1.spec.with_frequency(peak.y_star.clone()).dilate(c_prime)?;
            let lp = spec.enumerate(limits)?;
            if let Some((base, value)) = best_translate(f, l, &lp) {
                if value + NORM_TOL >= t2 {
                    return Ok(FourierIncrement::Bohr {
                        spec,
                        base,
                        value: rational::real12::round(value),
                        threshold: rational::real12::round(t2),
                        source: a,
                        y: peak.y_star,
                        y_error: rational::real12::round(peak.certified_error),
                        grid: g,
                    });
                }
                best_bohr = best_bohr.max(value);
            }
            g *= 4;
        }
    }
    Ok(FourierIncrement::Violation {
        best_translate: rational::real12::round(top.map_or(-1.0, |(_, v)| v)),
        best_bohr: rational::real12::round(best_bohr.max(-1.0)),
    })
}
