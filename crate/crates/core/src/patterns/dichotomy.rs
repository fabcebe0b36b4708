use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::count::{count_t_s, FunctionFamily};
use super::find::{find_configuration, Search};
use crate::bohr::{dilate_elements, enumerate_exact, regular_dilation, regularity_certificate, BohrSet, BohrSpec};
use crate::error::{Error, Result};
use crate::function::BoundedFunction;
use crate::gowers::{u2_correlation, u2_direct, NORM_TOL};
use crate::intset::IntSet;
use crate::rational::{self, binom2, int, powi, rat, Rational};
use crate::reduce::Limits;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomyThresholds {
    /// Whether these are the closed forms for `(s, d, δ)` rather than overrides.
    pub faithful: bool,
    /// Case (1) fires when `|Λ_s|` is at most this.
    #[serde(with = "rational::pair")]
    pub small: Rational,
    /// Case (2) fires at density `local_factor · δ` or more.
    #[serde(with = "rational::pair")]
    pub local_factor: Rational,
    /// Case (3) fires at a local U² norm of this or more.
    #[serde(with = "rational::pair")]
    pub u2: Rational,
    /// Largest admissible `c_1`, when enforced.
    #[serde(with = "rational::pair_opt")]
    pub c1_bound: Option<Rational>,
}

impl DichotomyThresholds {
    /// `32s²δ^{-C(s+1,2)}`, `1 + 1/8s²`, `δ^{C(s+1,2)}/32s²` and
    /// `c_1 <= δ^s/3200ds²`.
    pub fn faithful(s: usize, d: usize, delta: &Rational) -> Self {
        let s = s as i64;
        let k = binom2(s + 1);
        let s2 = int(s * s);
        DichotomyThresholds {
            faithful: true,
            small: int(32) * &s2 * powi(delta, -k),
            local_factor: rational::one() + rat(1, 8 * s * s),
            u2: powi(delta, k) / (int(32) * &s2),
            c1_bound: Some(powi(delta, s) / (int(3200 * d as i64) * s2)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum DichotomyOutcome {
    SmallBohr {
        size: usize,
        #[serde(with = "rational::pair")]
        threshold: Rational,
    },
    LocalIncrement {
        a: i64,
        i: usize,
        hits: usize,
        size: usize,
        #[serde(with = "rational::pair")]
        density: Rational,
        #[serde(with = "rational::pair")]
        threshold: Rational,
    },
    LargeU2 {
        i: usize,
        j: usize,
        #[serde(with = "rational::real12")]
        norm: f64,
        #[serde(with = "rational::pair")]
        threshold: Rational,
    },
    /// No case holds. Would contradict the dichotomy if the inputs meet its
    /// hypotheses.
    TheoremViolation {
        #[serde(with = "rational::pair")]
        max_density: Rational,
        #[serde(with = "rational::real12")]
        max_norm: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairNorm {
    pub i: usize,
    pub j: usize,
    #[serde(with = "rational::real12")]
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub s: usize,
    pub dimension: usize,
    #[serde(with = "rational::pair")]
    pub delta: Rational,
    #[serde(with = "rational::pair_vec")]
    pub cs: Vec<Rational>,
    /// `|Λ|, |Λ_1|, …, |Λ_s|`.
    pub sizes: Vec<usize>,
    pub regular: Vec<bool>,
    pub thresholds: DichotomyThresholds,
    pub outcome: DichotomyOutcome,
    pub u2_norms: Vec<PairNorm>,
    /// `T_s(1_A)` and the trivial-configuration bound `s²/|Λ_s|`.
    #[serde(with = "rational::real12")]
    pub t_s: f64,
    #[serde(with = "rational::real12")]
    pub noc_bound: f64,
    pub noc_holds: bool,
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct DichotomyOptions {
    /// `None` uses the faithful thresholds for the measured density.
    pub thresholds: Option<DichotomyThresholds>,
    pub limits: Limits,
    pub require_regular: bool,
}

impl Default for DichotomyOptions {
    fn default() -> Self {
        DichotomyOptions {
            thresholds: None,
            limits: Limits::default(),
            require_regular: true,
        }
    }
}

/// `Λ_1 = c_1Λ`, `Λ_i = c_iΛ_{i-1}` with each `c_i ∈ [x_i, 2x_i]` chosen so
/// that `Λ_i` is regular.
pub fn regular_chain(
    spec: &BohrSpec,
    xs: &[Rational],
    limits: &Limits,
) -> Result<Vec<(Rational, BohrSpec)>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut prev = spec.clone();
    for x in xs {
        let (c, next, _) = regular_dilation(&prev, x, limits)?;
        out.push((c, next.clone()));
        prev = next;
    }
    Ok(out)
}

fn chain(spec: &BohrSpec, cs: &[Rational]) -> Result<Vec<BohrSpec>> {
    let mut out: Vec<BohrSpec> = Vec::with_capacity(cs.len());
    for c in cs {
        let prev = out.last().unwrap_or(spec);
        out.push(prev.dilate(c)?);
    }
    Ok(out)
}

/// Run the local dichotomy for a configuration-free `A ⊆ Λ` and report the
/// first case that holds, scanning case (2) by increasing `i` then `a`.
pub fn dichotomy(
    set: &IntSet,
    lambda: &BohrSpec,
    s: usize,
    cs: &[Rational],
    opts: &DichotomyOptions,
) -> Result<DichotomyReport> {
    let limits = &opts.limits;
    if s < 2 || cs.len() != s {
        return Err(Error::Invalid(format!(
            "need s >= 2 and s dilation factors, got s = {s} with {} factors",
            cs.len()
        )));
    }
    let d = lambda.dimension();
    let cap = rat(1, 100 * d as i64);
    if let Some(c) = cs.iter().find(|c| !c.is_positive() || **c >= cap) {
        return Err(Error::Precondition(format!("dilation factor {c} outside (0, 1/100d)")));
    }
    let l = lambda.enumerate(limits)?;
    if set.is_empty() {
        return Err(Error::EmptySet("dichotomy input set"));
    }
    if let Some(x) = set.iter().find(|&x| !l.contains(x)) {
        return Err(Error::Precondition(format!("{x} is in A but not in Λ")));
    }
    match find_configuration(set, s, limits.search)? {
        Search::Found { configuration } => return Err(Error::ConfigurationExists(configuration)),
        Search::Inconclusive { budget, .. } => {
            return Err(Error::Capacity {
                what: "configuration search",
                needed: budget as u128 + 1,
                limit: budget as u128,
            })
        }
        Search::None { .. } => {}
    }
    let delta = rat(set.len() as i64, l.len() as i64);
    let thresholds = opts
        .thresholds
        .clone()
        .unwrap_or_else(|| DichotomyThresholds::faithful(s, d, &delta));
    if let Some(bound) = &thresholds.c1_bound {
        if &cs[0] > bound {
            return Err(Error::Precondition(format!("c_1 = {} exceeds {bound}", cs[0])));
        }
    }

    let specs = chain(lambda, cs)?;
    let inner: Vec<BohrSet> = specs
        .iter()
        .map(|sp| sp.enumerate(limits))
        .collect::<Result<_>>()?;
    if inner.iter().any(|x| x.is_empty()) {
        return Err(Error::EmptySet("dilated Bohr set"));
    }
    let mut regular = vec![regularity_certificate(lambda, limits)?.verdict];
    for sp in &specs {
        regular.push(regularity_certificate(sp, limits)?.verdict);
    }
    if opts.require_regular {
        if let Some(k) = regular.iter().position(|r| !r) {
            return Err(Error::Precondition(format!(
                "Bohr set {k} of the chain is not regular"
            )));
        }
    }

    let mut sizes = vec![l.len()];
    sizes.extend(inner.iter().map(|x| x.len()));
    let family = FunctionFamily::uniform(s, &BoundedFunction::indicator(set))?;
    let t_s = count_t_s(&family, &l, &inner, limits)?.value.re;
    let last = inner[s - 1].len();
    let noc_bound = (s * s) as f64 / last as f64;

    let mut report = DichotomyReport {
        s,
        dimension: d,
        delta: delta.clone(),
        cs: cs.to_vec(),
        sizes,
        regular,
        thresholds: thresholds.clone(),
        outcome: DichotomyOutcome::SmallBohr {
            size: last,
            threshold: thresholds.small.clone(),
        },
        u2_norms: Vec::new(),
        t_s,
        noc_bound,
        noc_holds: t_s <= noc_bound + NORM_TOL,
        tolerance: NORM_TOL,
    };
    if int(last as i64) <= thresholds.small {
        return Ok(report);
    }

    let target = &thresholds.local_factor * &delta;
    let mut max_density = rational::zero();
    for (k, li) in inner.iter().enumerate() {
        let doubled = dilate_elements(li.elements());
        let hits: Vec<Option<usize>> = l
            .elements()
            .par_iter()
            .map(|&a| {
                doubled
                    .iter()
                    .all(|&n| l.contains(a + n))
                    .then(|| set.count_in_translate(a, &doubled))
            })
            .collect();
        for (&a, h) in l.elements().iter().zip(&hits) {
            let Some(h) = *h else { continue };
            let density = rat(h as i64, li.len() as i64);
            if density >= target {
                report.outcome = DichotomyOutcome::LocalIncrement {
                    a,
                    i: k + 1,
                    hits: h,
                    size: li.len(),
                    density,
                    threshold: target,
                };
                return Ok(report);
            }
            if density > max_density {
                max_density = density;
            }
        }
    }

    let f = BoundedFunction::balanced(set, &l, rational::to_f64(&delta));
    let u2_target = rational::to_f64(&thresholds.u2);
    let mut first = None;
    for i in 1..=s {
        for j in i + 1..=s {
            let norm = u2_correlation(&f, &l, &inner[i - 1], &inner[j - 1], limits)?.norm;
            if first.is_none() && norm >= u2_target {
                first = Some((i, j, norm));
            }
            report.u2_norms.push(PairNorm { i, j, norm });
        }
    }
    report.outcome = match first {
        Some((i, j, norm)) => DichotomyOutcome::LargeU2 {
            i,
            j,
            norm,
            threshold: thresholds.u2.clone(),
        },
        None => DichotomyOutcome::TheoremViolation {
            max_density,
            max_norm: report.u2_norms.iter().map(|p| p.norm).fold(0.0, f64::max),
        },
    };
    Ok(report)
}

fn exact_size(spec: &BohrSpec, limits: &Limits) -> Result<usize> {
    Ok(enumerate_exact(spec, limits)?.len())
}

/// Re-derive the report's outcome from scratch. `TheoremViolation` never
/// rechecks.
pub fn recheck_dichotomy(
    report: &DichotomyReport,
    set: &IntSet,
    lambda: &BohrSpec,
    limits: &Limits,
) -> Result<bool> {
    let s = report.s;
    let size = exact_size(lambda, limits)?;
    if size == 0 || report.cs.len() != s {
        return Ok(false);
    }
    let delta = rat(set.len() as i64, size as i64);
    if delta != report.delta || report.sizes[0] != size {
        return Ok(false);
    }
    if report.thresholds.faithful
        && report.thresholds != DichotomyThresholds::faithful(s, lambda.dimension(), &delta)
    {
        return Ok(false);
    }
    let specs = chain(lambda, &report.cs)?;
    for (k, sp) in specs.iter().enumerate() {
        if exact_size(sp, limits)? != report.sizes[k + 1] {
            return Ok(false);
        }
    }
    let th = &report.thresholds;
    Ok(match &report.outcome {
        DichotomyOutcome::SmallBohr { size, threshold } => {
            *size == report.sizes[s] && threshold == &th.small && int(*size as i64) <= th.small
        }
        DichotomyOutcome::LocalIncrement {
            a,
            i,
            hits,
            size,
            density,
            threshold,
        } => {
            let li = specs[*i - 1].enumerate(limits)?;
            let inside = lambda.contains(*a)
                && li.elements().iter().all(|&n| lambda.contains(a + 2 * n));
            let count = li.elements().iter().filter(|&&n| set.contains(a + 2 * n)).count();
            let expected = &th.local_factor * &delta;
            inside
                && count == *hits
                && li.len() == *size
                && density == &rat(count as i64, li.len() as i64)
                && threshold == &expected
                && density >= &expected
        }
        DichotomyOutcome::LargeU2 { i, j, norm, threshold } => {
            let l = lambda.enumerate(limits)?;
            let li = specs[*i - 1].enumerate(limits)?;
            let lj = specs[*j - 1].enumerate(limits)?;
            let f = BoundedFunction::balanced(set, &l, rational::to_f64(&delta));
            let again = match u2_direct(&f, &l, &li, &lj, limits) {
                Ok(r) => r.norm,
                Err(Error::Capacity { .. }) => u2_correlation(&f, &l, &li, &lj, limits)?.norm,
                Err(e) => return Err(e),
            };
            (again - norm).abs() <= NORM_TOL * norm.max(1.0)
                && threshold == &th.u2
                && again + NORM_TOL >= rational::to_f64(threshold)
        }
        DichotomyOutcome::TheoremViolation { .. } => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(n: i64) -> BohrSpec {
        BohrSpec::interval(rat(2 * n + 1, 2)).unwrap()
    }

    #[test]
    fn faithful_thresholds() {
        let t = DichotomyThresholds::faithful(2, 1, &rat(1, 2));
        assert_eq!(t.small, int(32 * 4 * 8));
        assert_eq!(t.local_factor, rat(33, 32));
        assert_eq!(t.u2, rat(1, 8 * 32 * 4));
        assert_eq!(t.c1_bound, Some(rat(1, 4 * 3200 * 4)));
    }

    #[test]
    fn configuration_is_rejected_with_witness() {
        let set = IntSet::new(vec![1, 2, 3]);
        let err = dichotomy(&set, &interval(10), 2, &[rat(1, 1000), rat(1, 1000)], &Default::default())
            .unwrap_err();
        match err {
            Error::ConfigurationExists(c) => assert!(c.lies_in(&set)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn small_bohr_on_tiny_chain() {
        let set = IntSet::new(vec![-10, -9, -7, -6, -1, 0, 2, 3]);
        let lambda = interval(10);
        let opts = DichotomyOptions {
            require_regular: false,
            ..Default::default()
        };
        let cs = [rat(1, 200_000), rat(1, 200)];
        let r = dichotomy(&set, &lambda, 2, &cs, &opts).unwrap();
        assert!(matches!(r.outcome, DichotomyOutcome::SmallBohr { size: 1, .. }));
        assert!(r.noc_holds);
        assert!(recheck_dichotomy(&r, &set, &lambda, &Limits::default()).unwrap());
    }
}
