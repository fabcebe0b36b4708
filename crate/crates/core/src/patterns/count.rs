use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bohr::BohrSet;
use crate::error::{Error, Result};
use crate::function::{BoundedFunction, Dense};
use crate::gowers::{u2_correlation, NORM_TOL};
use crate::intset::IntSet;
use crate::ntt;
use crate::rational;
use crate::reduce::{pairwise_sum, Limits};

/// Functions `f_ij`, `1 <= i <= j <= s`, stored row by row.
#[derive(Clone, Debug)]
pub struct FunctionFamily {
    s: usize,
    fs: Vec<BoundedFunction>,
}

fn slot(s: usize, i: usize, j: usize) -> usize {
    debug_assert!(1 <= i && i <= j && j <= s);
    // Rows 1..i-1 hold s, s-1, ..., s-i+2 entries.
    (i - 1) * (s + 1) - (i - 1) * i / 2 + (j - i)
}

impl FunctionFamily {
    pub fn new(s: usize, fs: Vec<BoundedFunction>) -> Result<Self> {
        if s < 2 {
            return Err(Error::Invalid(format!("s must be at least 2, got {s}")));
        }
        if fs.len() != s * (s + 1) / 2 {
            return Err(Error::Invalid(format!(
                "a family for s = {s} needs {} functions, got {}",
                s * (s + 1) / 2,
                fs.len()
            )));
        }
        Ok(FunctionFamily { s, fs })
    }

    pub fn from_fn(s: usize, mut f: impl FnMut(usize, usize) -> BoundedFunction) -> Result<Self> {
        let mut fs = Vec::with_capacity(s * (s + 1) / 2);
        for i in 1..=s {
            for j in i..=s {
                fs.push(f(i, j));
            }
        }
        Self::new(s, fs)
    }

    pub fn uniform(s: usize, f: &BoundedFunction) -> Result<Self> {
        Self::from_fn(s, |_, _| f.clone())
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `f_ij` with 1-based indices, `i <= j`.
    pub fn get(&self, i: usize, j: usize) -> &BoundedFunction {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.fs[slot(self.s, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, f: BoundedFunction) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let k = slot(self.s, i, j);
        self.fs[k] = f;
    }
}

/// `T_s` together with its unnormalized sum, which is an exact integer for
/// indicator families small enough to stay below 2^53.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsValue {
    pub sum: Complex64,
    pub count: u128,
    pub value: Complex64,
}

struct Walk<'a> {
    tables: Vec<Vec<Dense>>,
    sets: &'a [BohrSet],
}

impl Walk<'_> {
    fn sum(&self, a: i64, ns: &mut Vec<i64>, acc: Complex64) -> Complex64 {
        let k = ns.len();
        if k == self.sets.len() {
            return acc;
        }
        let mut total = Complex64::new(0.0, 0.0);
        for &n in self.sets[k].elements() {
            let mut p = acc * self.tables[k][k].get(2 * n + a);
            for (i, &m) in ns.iter().enumerate() {
                if p.re == 0.0 && p.im == 0.0 {
                    break;
                }
                p *= self.tables[i][k].get(m + n + a);
            }
            if p.re == 0.0 && p.im == 0.0 {
                continue;
            }
            ns.push(n);
            total += self.sum(a, ns, p);
            ns.pop();
        }
        total
    }
}

/// `E_{a∈Λ} E_{n_1∈Λ_1} … E_{n_s∈Λ_s} ∏_{i<=j} f_ij(n_i + n_j + a)`.
pub fn count_t_s(
    family: &FunctionFamily,
    outer: &BohrSet,
    inner: &[BohrSet],
    limits: &Limits,
) -> Result<TsValue> {
    let s = family.s();
    if inner.len() != s {
        return Err(Error::Invalid(format!(
            "T_s needs {s} inner sets, got {}",
            inner.len()
        )));
    }
    if outer.is_empty() || inner.iter().any(|l| l.is_empty()) {
        return Err(Error::EmptySet("T_s averaging set"));
    }
    let count = inner
        .iter()
        .try_fold(outer.len() as u128, |acc, l| acc.checked_mul(l.len() as u128))
        .ok_or(Error::Overflow("T_s term count"))?;
    limits.check_counting("count_t_s", count)?;

    // tables[i][j] = f_{i+1, j+1} for i <= j.
    let tables: Vec<Vec<Dense>> = (1..=s)
        .map(|i| (1..=s).map(|j| family.get(i, j).dense()).collect())
        .collect();
    let walk = Walk {
        tables,
        sets: inner,
    };
    let per_a: Vec<Complex64> = outer
        .elements()
        .par_iter()
        .map(|&a| walk.sum(a, &mut Vec::with_capacity(s), Complex64::new(1.0, 0.0)))
        .collect();
    let sum = pairwise_sum(&per_a);
    Ok(TsValue {
        sum,
        count,
        value: sum / count as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VonNeumannCheck {
    pub i: usize,
    pub j: usize,
    #[serde(with = "rational::real12")]
    pub t_abs: f64,
    #[serde(with = "rational::real12")]
    pub norm: f64,
    pub holds: bool,
    pub tolerance: f64,
}

/// Both sides of `|T_s| <= ‖f_ij‖_{U²(Λ, Λ_i, Λ_j)}` for one pair `i < j`.
pub fn check_von_neumann(
    family: &FunctionFamily,
    outer: &BohrSet,
    inner: &[BohrSet],
    i: usize,
    j: usize,
    limits: &Limits,
) -> Result<VonNeumannCheck> {
    let s = family.s();
    if !(1 <= i && i < j && j <= s) {
        return Err(Error::Invalid(format!("need 1 <= i < j <= {s}, got ({i}, {j})")));
    }
    let t = count_t_s(family, outer, inner, limits)?;
    pair_check(family, outer, inner, t.value.norm(), i, j, limits)
}

/// The bound for every admissible pair, sharing one evaluation of `T_s`.
pub fn check_von_neumann_all(
    family: &FunctionFamily,
    outer: &BohrSet,
    inner: &[BohrSet],
    limits: &Limits,
) -> Result<Vec<VonNeumannCheck>> {
    let t = count_t_s(family, outer, inner, limits)?.value.norm();
    let s = family.s();
    let mut out = Vec::new();
    for i in 1..=s {
        for j in i + 1..=s {
            out.push(pair_check(family, outer, inner, t, i, j, limits)?);
        }
    }
    Ok(out)
}

fn pair_check(
    family: &FunctionFamily,
    outer: &BohrSet,
    inner: &[BohrSet],
    t_abs: f64,
    i: usize,
    j: usize,
    limits: &Limits,
) -> Result<VonNeumannCheck> {
    let norm = u2_correlation(family.get(i, j), outer, &inner[i - 1], &inner[j - 1], limits)?.norm;
    Ok(VonNeumannCheck {
        i,
        j,
        t_abs,
        norm,
        holds: t_abs <= norm + NORM_TOL,
        tolerance: NORM_TOL,
    })
}

/// Number of 3-term progressions `x < m < z` in `A`, by scanning pairs.
pub fn count_3aps_direct(set: &IntSet) -> u64 {
    let xs = set.as_slice();
    xs.par_iter()
        .enumerate()
        .map(|(k, &x)| {
            xs[k + 1..]
                .iter()
                .filter(|&&z| (z - x) % 2 == 0 && set.contains((x + z) / 2))
                .count() as u64
        })
        .sum()
}

/// For each `m ∈ A`, the number of pairs `x < z` in `A` with `x + z = 2m`,
/// read off the self-convolution of the indicator.
pub fn midpoint_counts(set: &IntSet) -> Vec<(i64, u64)> {
    let (Some(lo), Some(hi)) = (set.min(), set.max()) else {
        return Vec::new();
    };
    let mut ind = vec![0u64; (hi - lo) as usize + 1];
    for x in set.iter() {
        ind[(x - lo) as usize] = 1;
    }
    let conv = ntt::convolve(&ind, &ind);
    set.iter()
        .map(|m| (m, (conv[2 * (m - lo) as usize] - 1) / 2))
        .collect()
}

/// Number of 3-term progressions in `A`, by convolution.
pub fn count_3aps_fft(set: &IntSet) -> u64 {
    midpoint_counts(set).iter().map(|&(_, c)| c).sum()
}
