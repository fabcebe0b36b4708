//! Sorted integer sets with O(1) membership over their span.

use serde::{Deserialize, Serialize};

/// A finite set of integers, sorted ascending, with a dense membership
/// bitmap covering `[min, max]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<i64>", into = "Vec<i64>")]
pub struct IntSet {
    elements: Vec<i64>,
    lo: i64,
    bits: Vec<u64>,
}

impl IntSet {
    pub fn new(mut elements: Vec<i64>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        Self::from_sorted(elements)
    }

    /// `elements` must be strictly increasing.
    pub fn from_sorted(elements: Vec<i64>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        let (lo, bits) = match (elements.first(), elements.last()) {
            (Some(&lo), Some(&hi)) => {
                let span = (hi - lo) as usize + 1;
                let mut bits = vec![0u64; span.div_ceil(64)];
                for &x in &elements {
                    let k = (x - lo) as usize;
                    bits[k / 64] |= 1 << (k % 64);
                }
                (lo, bits)
            }
            _ => (0, Vec::new()),
        };
        IntSet { elements, lo, bits }
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        if x < self.lo {
            return false;
        }
        let k = (x - self.lo) as u64;
        let w = (k / 64) as usize;
        w < self.bits.len() && self.bits[w] >> (k % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.elements.iter().copied()
    }

    pub fn min(&self) -> Option<i64> {
        self.elements.first().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.elements.last().copied()
    }

    /// Number of elements of `self` in `base + other`.
    pub fn count_in_translate(&self, base: i64, other: &[i64]) -> usize {
        other.iter().filter(|&&n| self.contains(base + n)).count()
    }

    /// Difference set `A - A`.
    pub fn difference_set(&self) -> IntSet {
        let mut d = Vec::with_capacity(self.len() * self.len());
        for &x in &self.elements {
            for &y in &self.elements {
                d.push(x - y);
            }
        }
        IntSet::new(d)
    }

    /// Sumset `A + A`.
    pub fn sumset(&self) -> IntSet {
        let mut d = Vec::with_capacity(self.len() * (self.len() + 1) / 2);
        for (i, &x) in self.elements.iter().enumerate() {
            for &y in &self.elements[i..] {
                d.push(x + y);
            }
        }
        IntSet::new(d)
    }
}

impl From<Vec<i64>> for IntSet {
    fn from(v: Vec<i64>) -> Self {
        IntSet::new(v)
    }
}

impl From<IntSet> for Vec<i64> {
    fn from(s: IntSet) -> Self {
        s.elements
    }
}

impl FromIterator<i64> for IntSet {
    fn from_iter<T: IntoIterator<Item = i64>>(iter: T) -> Self {
        IntSet::new(iter.into_iter().collect())
    }
}
