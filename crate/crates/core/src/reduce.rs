//! Deterministic summation and work limits.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pairwise (tree) sum: the result depends only on the order of `xs`,
/// never on how the terms were produced.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_real(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_real(&xs[..mid]) + pairwise_sum_real(&xs[mid..])
}

/// Caps on enumeration and counting work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of candidate integers scanned when enumerating a Bohr set.
    pub enumeration: u64,
    /// Maximum number of summand evaluations in a counting average.
    pub counting: u128,
    /// Maximum number of search nodes visited by a finder.
    pub search: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration: 10_000_000,
            counting: 4_000_000_000,
            search: 50_000_000,
        }
    }
}

impl Limits {
    pub fn check_counting(&self, what: &'static str, needed: u128) -> Result<()> {
        if needed > self.counting {
            return Err(Error::Capacity {
                what,
                needed,
                limit: self.counting,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<Complex64> = (0..1000).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let s = pairwise_sum(&xs);
        assert_eq!(s, Complex64::new(499500.0, -499500.0));
        assert_eq!(pairwise_sum(&[]), Complex64::new(0.0, 0.0));
    }
}
