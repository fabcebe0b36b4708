//! Finitely supported 1-bounded complex functions on the integers.

use num_complex::Complex64;
use crate::bohr::BohrSet;
use crate::error::{Error, Result};
use crate::intset::IntSet;

/// Tolerance on `|f| <= 1`.
pub const BOUND_TOL: f64 = 1e-12;

/// `e(x) = exp(2πix)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let t = std::f64::consts::TAU * (x - x.floor());
    Complex64::new(t.cos(), t.sin())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundedFunction {
    support: Vec<i64>,
    values: Vec<Complex64>,
}

impl BoundedFunction {
    pub fn new(mut pairs: Vec<(i64, Complex64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Invalid(format!("point {} given twice", w[0].0)));
            }
        }
        for &(n, v) in &pairs {
            if !(v.norm() <= 1.0 + BOUND_TOL) {
                return Err(Error::Invalid(format!("|f({n})| = {} exceeds 1", v.norm())));
            }
        }
        let (support, values) = pairs.into_iter().unzip();
        Ok(BoundedFunction { support, values })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn indicator(set: &IntSet) -> Self {
        BoundedFunction {
            support: set.as_slice().to_vec(),
            values: vec![Complex64::new(1.0, 0.0); set.len()],
        }
    }

    /// `1_A - δ·1_Λ`, supported on `Λ ∪ A`.
    pub fn balanced(a: &IntSet, lambda: &BohrSet, delta: f64) -> Self {
        let mut pts: Vec<i64> = lambda.elements().to_vec();
        pts.extend(a.iter().filter(|&x| !lambda.contains(x)));
        pts.sort_unstable();
        let values = pts
            .iter()
            .map(|&n| {
                let ind = if a.contains(n) { 1.0 } else { 0.0 };
                let base = if lambda.contains(n) { delta } else { 0.0 };
                Complex64::new(ind - base, 0.0)
            })
            .collect();
        BoundedFunction {
            support: pts,
            values,
        }
    }

    /// The character `n ↦ e(nβ)` restricted to `support`.
    pub fn character(beta: f64, support: &[i64]) -> Self {
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        let values = support.iter().map(|&n| e(n as f64 * beta)).collect();
        BoundedFunction { support, values }
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn pairs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn eval(&self, n: i64) -> Complex64 {
        match self.support.binary_search(&n) {
            Ok(k) => self.values[k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `n ↦ f(n)·e(nβ)`.
    pub fn modulate(&self, beta: f64) -> Self {
        BoundedFunction {
            support: self.support.clone(),
            values: self
                .pairs()
                .map(|(n, v)| v * e(n as f64 * beta))
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        BoundedFunction {
            support: self.support.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Restriction to the points of `keep`.
    pub fn restrict(&self, keep: &IntSet) -> Self {
        let (support, values) = self.pairs().filter(|(n, _)| keep.contains(*n)).unzip();
        BoundedFunction { support, values }
    }

    pub fn dense(&self) -> Dense {
        Dense::new(self)
    }
}

/// Dense lookup table over the span of a function's support.
#[derive(Clone, Debug)]
pub struct Dense {
    lo: i64,
    vals: Vec<Complex64>,
}

impl Dense {
    pub fn new(f: &BoundedFunction) -> Self {
        match (f.support.first(), f.support.last()) {
            (Some(&lo), Some(&hi)) => {
                let mut vals = vec![Complex64::new(0.0, 0.0); (hi - lo) as usize + 1];
                for (n, v) in f.pairs() {
                    vals[(n - lo) as usize] = v;
                }
                Dense { lo, vals }
            }
            _ => Dense {
                lo: 0,
                vals: Vec::new(),
            },
        }
    }

    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        let k = n.wrapping_sub(self.lo);
        if k >= 0 && (k as usize) < self.vals.len() {
            self.vals[k as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unbounded_and_duplicates() {
        assert!(BoundedFunction::new(vec![(0, Complex64::new(1.0, 1.0))]).is_err());
        assert!(BoundedFunction::new(vec![(0, Complex64::new(0.5, 0.0)), (0, Complex64::new(0.1, 0.0))]).is_err());
        let f = BoundedFunction::new(vec![(3, Complex64::new(0.0, 1.0)), (-1, Complex64::new(0.5, 0.0))]).unwrap();
        assert_eq!(f.support(), &[-1, 3]);
        assert_eq!(f.eval(3), Complex64::new(0.0, 1.0));
        assert_eq!(f.eval(4), Complex64::new(0.0, 0.0));
        let d = f.dense();
        assert_eq!(d.get(-1), Complex64::new(0.5, 0.0));
        assert_eq!(d.get(100), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn character_has_unit_modulus() {
        let f = BoundedFunction::character(0.3141, &[-5, 0, 7, 7]);
        assert_eq!(f.support().len(), 3);
        for v in f.values() {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
        assert!((f.eval(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
