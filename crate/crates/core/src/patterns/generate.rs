use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intset::IntSet;

/// Parameters of a Behrend sphere-shell set: vectors in `[0, m)^k` with
/// squared norm `radius`, read as base-`2m-1` numbers and shifted by one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehrendChoice {
    pub dim: u32,
    pub digits: u64,
    pub base: u64,
    pub radius: u64,
    pub size: usize,
}

/// Visit every digit vector in `[0, m)^k` whose value is at most `cap`.
fn walk(k: u32, m: u64, cap: u64, visit: &mut impl FnMut(u64, u64)) {
    let base = 2 * m - 1;
    fn rec(pos: i32, value: u64, norm: u64, m: u64, base: u64, cap: u64, visit: &mut impl FnMut(u64, u64)) {
        if pos < 0 {
            visit(value, norm);
            return;
        }
        let place = base.pow(pos as u32);
        for x in 0..m {
            let v = value + x * place;
            if v > cap {
                break;
            }
            rec(pos - 1, v, norm + x * x, m, base, cap, visit);
        }
    }
    rec(k as i32 - 1, 0, 0, m, base, cap, visit);
}

/// Size of every shell for dimension `k` and digit bound `m`, keeping only
/// points that land in `[1, n]`.
pub fn behrend_shells(n: u64, k: u32, m: u64) -> BTreeMap<u64, usize> {
    let mut shells = BTreeMap::new();
    if n == 0 || m < 2 {
        return shells;
    }
    walk(k, m, n - 1, &mut |_, r| *shells.entry(r).or_insert(0) += 1);
    shells
}

/// Sweep dimensions and digit bounds, keeping the largest shell. Ties go to
/// the smaller dimension, then fewer digits, then the smaller radius.
pub fn behrend_choice(n: u64) -> BehrendChoice {
    let mut best = BehrendChoice {
        dim: 2,
        digits: 2,
        base: 3,
        radius: 0,
        size: usize::from(n >= 1),
    };
    if n == 0 {
        return best;
    }
    let mut k = 2u32;
    while k == 2 || 3u64.checked_pow(k - 1).is_some_and(|p| p <= n) {
        let mut m = 2u64;
        loop {
            let base = 2 * m - 1;
            let high = base.checked_pow(k - 1);
            let cube = m.checked_pow(k);
            if m > 2 && (high.map_or(true, |h| h > n) || cube.map_or(true, |c| c > 8 * n)) {
                break;
            }
            for (&r, &size) in &behrend_shells(n, k, m) {
                if size > best.size {
                    best = BehrendChoice {
                        dim: k,
                        digits: m,
                        base,
                        radius: r,
                        size,
                    };
                }
            }
            m += 1;
        }
        k += 1;
    }
    best
}

/// Behrend's 3-AP-free subset of `[1, n]`.
pub fn behrend_set(n: u64) -> IntSet {
    if n == 0 {
        return IntSet::default();
    }
    let c = behrend_choice(n);
    let mut out = Vec::with_capacity(c.size);
    walk(c.dim, c.digits, n - 1, &mut |v, r| {
        if r == c.radius {
            out.push(v as i64 + 1);
        }
    });
    IntSet::new(out)
}

/// Each of `1..=n` independently with probability `delta`, from a seeded
/// ChaCha stream.
pub fn random_set(n: u64, delta: f64, seed: u64) -> Result<IntSet> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Invalid(format!("density {delta} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((1..=n as i64).filter(|_| rng.gen_bool(delta)).collect())
}
