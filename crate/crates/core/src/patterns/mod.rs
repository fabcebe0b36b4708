//! s-configurations `{n_i + n_j + a : 1 <= i <= j <= s}`: finders, the
//! counting operator `T_s`, the local von Neumann bound, the local
//! dichotomy, and generators for test sets.
//!
//! Writing `x_i = 2n_i + a`, the configuration is the points `x_1..x_s`
//! together with all their pairwise midpoints, so a nontrivial
//! configuration is the same thing as `s` distinct integers of one parity
//! whose midpoints all lie in the set.

mod count;
mod dichotomy;
mod find;
mod generate;

pub use count::{
    check_von_neumann, check_von_neumann_all, count_3aps_direct, count_3aps_fft, count_t_s,
    midpoint_counts, FunctionFamily, TsValue, VonNeumannCheck,
};
pub use dichotomy::{
    dichotomy, recheck_dichotomy, regular_chain, DichotomyOptions, DichotomyOutcome, DichotomyReport,
    DichotomyThresholds, PairNorm,
};
pub use find::{find_configuration, find_configuration_in_bohr, Search};
pub use generate::{behrend_choice, behrend_set, behrend_shells, random_set, BehrendChoice};

use serde::{Deserialize, Serialize};

use crate::intset::IntSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub a: i64,
    pub ns: Vec<i64>,
}

impl Configuration {
    pub fn new(a: i64, ns: Vec<i64>) -> Self {
        Configuration { a, ns }
    }

    pub fn s(&self) -> usize {
        self.ns.len()
    }

    /// The multiset `n_i + n_j + a`, `i <= j`, in lexicographic `(i, j)` order.
    pub fn elements(&self) -> Vec<i64> {
        let s = self.ns.len();
        let mut out = Vec::with_capacity(s * (s + 1) / 2);
        for i in 0..s {
            for j in i..s {
                out.push(self.ns[i] + self.ns[j] + self.a);
            }
        }
        out
    }

    pub fn is_nontrivial(&self) -> bool {
        let mut ns = self.ns.clone();
        ns.sort_unstable();
        ns.windows(2).all(|w| w[0] != w[1])
    }

    /// Canonical form of the configuration spanned by points of one parity:
    /// `a` is the smallest point and `n_i = (x_i - a)/2`.
    pub fn from_points(xs: &[i64]) -> Option<Self> {
        let a = *xs.iter().min()?;
        if xs.iter().any(|x| (x - a) % 2 != 0) {
            return None;
        }
        Some(Configuration {
            a,
            ns: xs.iter().map(|x| (x - a) / 2).collect(),
        })
    }

    /// Image under `n ↦ base + scale·n`.
    pub fn map_affine(&self, base: i64, scale: i64) -> Self {
        Configuration {
            a: base + scale * self.a,
            ns: self.ns.iter().map(|n| scale * n).collect(),
        }
    }

    pub fn lies_in(&self, set: &IntSet) -> bool {
        self.elements().iter().all(|&x| set.contains(x))
    }
}
