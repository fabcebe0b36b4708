//! Local Gowers U² norm over a nested Bohr triple, certified Fourier
//! suprema, and the inverse-theorem check.
//!
//! For a triple `(Λ, Λ₁, Λ₂)` the fourth power of the norm is
//!
//! ```text
//! E_{a∈Λ} E_{n₁,n₁'∈Λ₁} E_{n₂,n₂'∈Λ₂} f(a+n₁+n₂) conj(f(a+n₁+n₂') f(a+n₁'+n₂)) f(a+n₁'+n₂')
//! ```
//!
//! computed either as written (`u2_direct`) or through the inner square
//! `E_a E_{n₁,n₁'} |E_{n₂} f(a+n₁+n₂) conj f(a+n₁'+n₂)|²` (`u2_correlation`).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bohr::{regularity_certificate, BohrSet, BohrSpec};
use crate::error::{Error, Result};
use crate::function::{BoundedFunction, Dense};
use crate::rational::{self, rat, Rational};
use crate::reduce::{pairwise_sum, pairwise_sum_real, Limits};

/// Comparison tolerance for real-valued norm identities.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum U2Method {
    Direct,
    Correlation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct U2Report {
    #[serde(with = "rational::real12")]
    pub fourth_power: f64,
    #[serde(with = "rational::real12")]
    pub norm: f64,
    pub method: U2Method,
    pub triple: Vec<BohrSpec>,
    pub tolerance: f64,
}

fn check_nonempty(sets: &[&BohrSet]) -> Result<()> {
    if sets.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptySet("U2 triple"));
    }
    Ok(())
}

fn report(sum: Complex64, count: f64, method: U2Method, sets: [&BohrSet; 3]) -> U2Report {
    let raw = sum.re / count;
    let fourth_power = raw.max(0.0);
    U2Report {
        fourth_power,
        norm: fourth_power.powf(0.25),
        method,
        triple: sets.iter().map(|s| s.spec.clone()).collect(),
        tolerance: NORM_TOL,
    }
}

/// The five-fold average exactly as written.
pub fn u2_direct(
    f: &BoundedFunction,
    l: &BohrSet,
    l1: &BohrSet,
    l2: &BohrSet,
    limits: &Limits,
) -> Result<U2Report> {
    check_nonempty(&[l, l1, l2])?;
    let (n, n1, n2) = (l.len() as u128, l1.len() as u128, l2.len() as u128);
    limits.check_counting("u2_direct", n * n1 * n1 * n2 * n2)?;
    let dense = f.dense();
    let inner: Vec<Complex64> = l
        .elements()
        .par_iter()
        .map(|&a| {
            let rows = rows_for(&dense, a, l1.elements(), l2.elements());
            let mut acc = Complex64::zero();
            for gx in &rows {
                for gy in &rows {
                    for (k, u) in gx.iter().enumerate() {
                        let v = gy[k].conj();
                        for (k2, w) in gx.iter().enumerate() {
                            acc += u * w.conj() * v * gy[k2];
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let count = (n * n1 * n1 * n2 * n2) as f64;
    Ok(report(pairwise_sum(&inner), count, U2Method::Direct, [l, l1, l2]))
}

/// The inner-square form; manifestly nonnegative.
pub fn u2_correlation(
    f: &BoundedFunction,
    l: &BohrSet,
    l1: &BohrSet,
    l2: &BohrSet,
    limits: &Limits,
) -> Result<U2Report> {
    check_nonempty(&[l, l1, l2])?;
    let (n, n1, n2) = (l.len() as u128, l1.len() as u128, l2.len() as u128);
    limits.check_counting("u2_correlation", n * n1 * n1 * n2)?;
    let dense = f.dense();
    let inner: Vec<Complex64> = l
        .elements()
        .par_iter()
        .map(|&a| {
            let rows = rows_for(&dense, a, l1.elements(), l2.elements());
            let mut acc = 0.0;
            for gx in &rows {
                for gy in &rows {
                    let c: Complex64 = gx.iter().zip(gy).map(|(u, v)| u * v.conj()).sum();
                    acc += c.norm_sqr();
                }
            }
            Complex64::new(acc, 0.0)
        })
        .collect();
    let count = (n * n1 * n1 * n2 * n2) as f64;
    Ok(report(pairwise_sum(&inner), count, U2Method::Correlation, [l, l1, l2]))
}

/// `rows[i][k] = f(a + l1[i] + l2[k])`.
fn rows_for(dense: &Dense, a: i64, l1: &[i64], l2: &[i64]) -> Vec<Vec<Complex64>> {
    l1.iter()
        .map(|&n1| l2.iter().map(|&n2| dense.get(a + n1 + n2)).collect())
        .collect()
}

/// Grid maximizer of `y ↦ |E_{n₂∈Λ₂} f(a+n₂) e(n₂y)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSup {
    #[serde(with = "rational::pair")]
    pub y_star: Rational,
    #[serde(with = "rational::real12")]
    pub value: f64,
    #[serde(with = "rational::real12")]
    pub certified_error: f64,
}

/// Evaluation of exponential sums on the grid `k/G`, `0 <= k < G`.
pub struct FourierGrid {
    points: usize,
    roots: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
}

impl FourierGrid {
    /// Sums with at most this many nonzero terms skip the FFT.
    const DIRECT_TERMS: usize = 32;

    pub fn new(points: usize) -> Self {
        let roots = (0..points)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / points as f64;
                Complex64::new(t.cos(), t.sin())
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_inverse(points);
        FourierGrid { points, roots, fft }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Smallest grid admissible for `Λ₂`: `4·(max|n₂| + 1)`.
    pub fn required_points(l2: &BohrSet) -> usize {
        4 * (l2.max_abs() as usize + 1)
    }

    /// `|E_{n₂} f(a+n₂) e(n₂k/G)|` for every `k`.
    pub fn magnitudes(&self, dense: &Dense, a: i64, l2: &[i64]) -> Vec<f64> {
        let g = self.points;
        let scale = 1.0 / l2.len() as f64;
        let coeffs: Vec<(usize, Complex64)> = l2
            .iter()
            .map(|&n| (n.rem_euclid(g as i64) as usize, dense.get(a + n)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        if coeffs.len() <= Self::DIRECT_TERMS {
            (0..g)
                .map(|k| {
                    let mut acc = Complex64::zero();
                    for &(r, v) in &coeffs {
                        acc += v * self.roots[(r * k) % g];
                    }
                    acc.norm() * scale
                })
                .collect()
        } else {
            let mut buf = vec![Complex64::zero(); g];
            for (r, v) in coeffs {
                buf[r] += v;
            }
            self.fft.process(&mut buf);
            buf.iter().map(|v| v.norm() * scale).collect()
        }
    }

    fn sup(&self, dense: &Dense, a: i64, l2: &BohrSet) -> FourierSup {
        let mags = self.magnitudes(dense, a, l2.elements());
        let mut best = 0;
        for (k, &v) in mags.iter().enumerate() {
            if v > mags[best] {
                best = k;
            }
        }
        FourierSup {
            y_star: rat(best as i64, self.points as i64),
            value: mags[best],
            certified_error: PI * l2.max_abs() as f64 / self.points as f64,
        }
    }
}

fn check_grid(l2: &BohrSet, grid: usize) -> Result<()> {
    if l2.is_empty() {
        return Err(Error::EmptySet("Fourier supremum over empty set"));
    }
    let needed = FourierGrid::required_points(l2);
    if grid < needed {
        return Err(Error::GridTooCoarse { grid, needed });
    }
    Ok(())
}

/// Certified supremum over `y` of `|E_{n₂∈Λ₂} f(a+n₂) e(n₂y)|`: the true
/// supremum lies in `[value, value + certified_error]`.
pub fn fourier_sup(f: &BoundedFunction, a: i64, l2: &BohrSet, grid: usize) -> Result<FourierSup> {
    check_grid(l2, grid)?;
    Ok(FourierGrid::new(grid).sup(&f.dense(), a, l2))
}

/// Grid suprema for every `a ∈ points`, in order.
pub fn fourier_sups(
    f: &BoundedFunction,
    points: &[i64],
    l2: &BohrSet,
    grid: usize,
) -> Result<Vec<FourierSup>> {
    check_grid(l2, grid)?;
    let fg = FourierGrid::new(grid);
    let dense = f.dense();
    Ok(points.par_iter().map(|&a| fg.sup(&dense, a, l2)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseAverage {
    /// `E_a value(a)²` from the grid maxima: a lower bound on the true average.
    #[serde(with = "rational::real12")]
    pub value: f64,
    /// Upper bound minus lower bound implied by the grid certification.
    #[serde(with = "rational::real12")]
    pub slack: f64,
    #[serde(with = "rational::real12")]
    pub certified_error: f64,
}

/// `E_{a∈Λ} sup_y |E_{n₂∈Λ₂} f(a+n₂) e(n₂y)|²` on the grid.
pub fn inverse_average(
    f: &BoundedFunction,
    l: &BohrSet,
    l2: &BohrSet,
    grid: usize,
) -> Result<InverseAverage> {
    if l.is_empty() {
        return Err(Error::EmptySet("inverse_average outer set"));
    }
    let sups = fourier_sups(f, l.elements(), l2, grid)?;
    let err = sups.first().map(|s| s.certified_error).unwrap_or(0.0);
    let lows: Vec<f64> = sups.iter().map(|s| s.value * s.value).collect();
    let highs: Vec<f64> = sups
        .iter()
        .map(|s| {
            let u = (s.value + s.certified_error).min(1.0).max(s.value);
            u * u
        })
        .collect();
    let n = l.len() as f64;
    let value = pairwise_sum_real(&lows) / n;
    let upper = pairwise_sum_real(&highs) / n;
    Ok(InverseAverage {
        value,
        slack: upper - value,
        certified_error: err,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseStatus {
    Pass,
    Fail,
    HypothesisNotMet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseCheck {
    pub status: InverseStatus,
    #[serde(with = "rational::pair")]
    pub c1: Rational,
    #[serde(with = "rational::pair")]
    pub c2: Rational,
    #[serde(with = "rational::real12")]
    pub eta: f64,
    pub dimension: usize,
    pub c1_within_bound: bool,
    pub c2_within_bound: bool,
    /// Regularity verdicts for `Λ`, `Λ₁`, `Λ₂`.
    pub regular: [bool; 3],
    pub sizes: [usize; 3],
    #[serde(with = "rational::real12")]
    pub norm: f64,
    pub norm_at_least_eta: bool,
    #[serde(with = "rational::real12")]
    pub conclusion: f64,
    #[serde(with = "rational::real12")]
    pub slack: f64,
    /// `η⁸/40`.
    #[serde(with = "rational::real12")]
    pub threshold: f64,
    /// Measured conclusion over `η²`, the classical exponent, for comparison.
    #[serde(with = "rational::real12")]
    pub classical_ratio: f64,
    pub tolerance: f64,
}

/// Test the local inverse theorem on `f` for `Λ₁ = c₁Λ`, `Λ₂ = c₂Λ₁`.
///
/// Hypotheses: all three sets regular, `c₁ <= η⁸/5000d`, `c₂ <= η²/400d`,
/// and `‖f‖ >= η`. The conclusion is `E_a sup_y |…|² >= η⁸/40`, judged
/// against the grid lower bound plus its certified slack.
pub fn check_inverse_theorem(
    f: &BoundedFunction,
    spec: &BohrSpec,
    c1: &Rational,
    c2: &Rational,
    eta: f64,
    grid: usize,
    limits: &Limits,
) -> Result<InverseCheck> {
    let s1 = spec.dilate(c1)?;
    let s2 = s1.dilate(c2)?;
    let l = spec.enumerate(limits)?;
    let l1 = s1.enumerate(limits)?;
    let l2 = s2.enumerate(limits)?;
    let regular = [
        regularity_certificate(spec, limits)?.verdict,
        regularity_certificate(&s1, limits)?.verdict,
        regularity_certificate(&s2, limits)?.verdict,
    ];
    let d = spec.dimension() as i64;
    let eta_q = Rational::from_float(eta)
        .ok_or_else(|| Error::Invalid(format!("eta = {eta} is not finite")))?;
    let c1_bound = rational::powi(&eta_q, 8) / rational::int(5000 * d);
    let c2_bound = rational::powi(&eta_q, 2) / rational::int(400 * d);
    let c1_ok = c1 <= &c1_bound;
    let c2_ok = c2 <= &c2_bound;

    let norm = u2_correlation(f, &l, &l1, &l2, limits)?.norm;
    let norm_ok = norm + NORM_TOL >= eta;
    let avg = inverse_average(f, &l, &l2, grid.max(FourierGrid::required_points(&l2)))?;
    let threshold = eta.powi(8) / 40.0;

    let hypotheses = c1_ok && c2_ok && norm_ok && regular.iter().all(|&r| r) && eta > 0.0 && eta < 1.0;
    let status = if !hypotheses {
        InverseStatus::HypothesisNotMet
    } else if avg.value + avg.slack + NORM_TOL >= threshold {
        InverseStatus::Pass
    } else {
        InverseStatus::Fail
    };
    Ok(InverseCheck {
        status,
        c1: c1.clone(),
        c2: c2.clone(),
        eta,
        dimension: d as usize,
        c1_within_bound: c1_ok,
        c2_within_bound: c2_ok,
        regular,
        sizes: [l.len(), l1.len(), l2.len()],
        norm,
        norm_at_least_eta: norm_ok,
        conclusion: avg.value,
        slack: avg.slack,
        threshold,
        classical_ratio: if eta > 0.0 { avg.value / (eta * eta) } else { 0.0 },
        tolerance: NORM_TOL,
    })
}
