//! Sum-free-with-respect-to checks and search, Freiman 2-isomorphisms into
//! cyclic groups via Ruzsa's embedding, and configuration search routed
//! through such an embedding.

use std::collections::HashMap;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intset::IntSet;
use crate::patterns::{find_configuration, Configuration, Search};
use crate::rational::{self, rat, Rational};

/// Largest domain for which quadruples are checked one by one.
pub const EXHAUSTIVE_LIMIT: usize = 80;

/// `z₁ + z₂ ∉ W` for all distinct `z₁, z₂ ∈ Z`.
pub fn is_sumfree_with_respect_to(z: &IntSet, w: &IntSet) -> bool {
    let xs = z.as_slice();
    xs.iter()
        .enumerate()
        .all(|(i, &a)| xs[i + 1..].iter().all(|&b| !w.contains(a + b)))
}

/// A map from a finite set of integers into `Z/NZ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreimanMap {
    pub modulus: u64,
    /// `(a, φ(a))`, sorted by `a`.
    pub pairs: Vec<(i64, u64)>,
}

impl FreimanMap {
    pub fn new(modulus: u64, mut pairs: Vec<(i64, u64)>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Invalid("modulus must be positive".into()));
        }
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid("map lists a domain element twice".into()));
        }
        for p in &mut pairs {
            p.1 %= modulus;
        }
        Ok(FreimanMap { modulus, pairs })
    }

    /// Reduction modulo `n` on `domain`.
    pub fn reduction(domain: &IntSet, n: u64) -> Result<Self> {
        let pairs = domain
            .iter()
            .map(|a| (a, a.rem_euclid(n as i64) as u64))
            .collect();
        Self::new(n, pairs)
    }

    pub fn domain(&self) -> IntSet {
        IntSet::from_sorted(self.pairs.iter().map(|p| p.0).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn image(&self, a: i64) -> Option<u64> {
        self.pairs
            .binary_search_by_key(&a, |p| p.0)
            .ok()
            .map(|k| self.pairs[k].1)
    }

    fn is_injective(&self) -> bool {
        let mut imgs: Vec<u64> = self.pairs.iter().map(|p| p.1).collect();
        imgs.sort_unstable();
        imgs.windows(2).all(|w| w[0] != w[1])
    }
}

/// Both directions of `a₁+a₂ = a₃+a₄ ⟺ φ(a₁)+φ(a₂) = φ(a₃)+φ(a₄)` over every
/// quadruple, plus injectivity. Quartic in the domain size.
pub fn check_freiman_isomorphic(map: &FreimanMap) -> bool {
    if !map.is_injective() {
        return false;
    }
    let n = map.modulus as u128;
    let p = &map.pairs;
    (0..p.len()).into_par_iter().all(|i| {
        let (a1, f1) = p[i];
        p.iter().all(|&(a2, f2)| {
            p.iter().all(|&(a3, f3)| {
                p.iter().all(|&(a4, f4)| {
                    let lhs = a1 + a2 == a3 + a4;
                    let rhs = (f1 as u128 + f2 as u128) % n == (f3 as u128 + f4 as u128) % n;
                    lhs == rhs
                })
            })
        })
    })
}

/// The same property checked through pair sums: the map `a+b ↦ φ(a)+φ(b)`
/// must be well defined and injective. Quadratic in the domain size.
pub fn check_freiman_by_sums(map: &FreimanMap) -> bool {
    if !map.is_injective() {
        return false;
    }
    let n = map.modulus as u128;
    let mut forward: HashMap<i64, u64> = HashMap::new();
    let mut backward: HashMap<u64, i64> = HashMap::new();
    let p = &map.pairs;
    for (i, &(a, fa)) in p.iter().enumerate() {
        for &(b, fb) in &p[i..] {
            let s = a + b;
            let t = ((fa as u128 + fb as u128) % n) as u64;
            if *forward.entry(s).or_insert(t) != t || *backward.entry(t).or_insert(s) != s {
                return false;
            }
        }
    }
    true
}

/// Exhaustive quadruple check for small domains, the pair-sum check otherwise.
pub fn verify_freiman(map: &FreimanMap) -> bool {
    if map.len() <= EXHAUSTIVE_LIMIT {
        check_freiman_isomorphic(map)
    } else {
        check_freiman_by_sums(map)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub map: FreimanMap,
    /// Measured `|A - A| / |A|`.
    #[serde(with = "rational::pair")]
    pub doubling: Rational,
    #[serde(with = "rational::pair")]
    pub k: Rational,
    #[serde(with = "rational::pair")]
    pub c_embed: Rational,
    /// Largest modulus accepted: `c_embed · K · |A|`.
    #[serde(with = "rational::pair")]
    pub modulus_bound: Rational,
    pub prime: u64,
    pub multiplier: u64,
    pub seed: u64,
    pub attempts: usize,
    pub exhaustive: bool,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn next_prime(mut n: u64) -> u64 {
    while !is_prime(n) {
        n += 1;
    }
    n
}

/// Smallest `N >= lo` for which reduction mod `N` is injective on `Y + Y`.
fn smallest_modulus(ys: &[u64], lo: u64) -> u64 {
    let mut sums: Vec<u64> = Vec::with_capacity(ys.len() * (ys.len() + 1) / 2);
    for (i, &a) in ys.iter().enumerate() {
        for &b in &ys[i..] {
            sums.push(a + b);
        }
    }
    sums.sort_unstable();
    sums.dedup();
    let top = sums.last().copied().unwrap_or(0) + 1;
    let mut seen = Vec::new();
    let mut n = lo.max(1);
    while n < top {
        seen.clear();
        seen.resize(n as usize, false);
        if sums.iter().all(|&s| !std::mem::replace(&mut seen[(s % n) as usize], true)) {
            return n;
        }
        n += 1;
    }
    top.max(lo)
}

/// One embedding attempt with multiplier `lambda` modulo the prime `q`:
/// keep the cyclic window of length `(q+1)/2` holding the most points and
/// compress it into the smallest workable modulus.
fn attempt(normalized: &[(i64, u64)], q: u64, lambda: u64) -> (Vec<(i64, u64)>, u64) {
    let mut pts: Vec<(u64, i64)> = normalized
        .iter()
        .map(|&(orig, x)| (((x as u128 * lambda as u128) % q as u128) as u64, orig))
        .collect();
    pts.sort_unstable();
    let len = (q + 1) / 2;
    let m = pts.len();
    let (mut best_start, mut best_count) = (0usize, 0usize);
    let mut hi = 0usize;
    for lo in 0..m {
        // Window [pts[lo], pts[lo] + len) taken cyclically.
        hi = hi.max(lo);
        while hi - lo < m && {
            let y = pts[hi % m].0 + if hi >= m { q } else { 0 };
            y < pts[lo].0 + len
        } {
            hi += 1;
        }
        if hi - lo > best_count {
            best_count = hi - lo;
            best_start = lo;
        }
    }
    let start = pts[best_start].0;
    let mut kept: Vec<(i64, u64)> = (best_start..best_start + best_count)
        .map(|k| {
            let (y, orig) = pts[k % m];
            (orig, (y + q - start) % q)
        })
        .collect();
    kept.sort_unstable();
    let ys: Vec<u64> = kept.iter().map(|p| p.1).collect();
    let n = smallest_modulus(&ys, ys.len() as u64);
    (kept, n)
}

/// Find `A' ⊆ A` with `|A'| >= |A|/2` and a verified Freiman 2-isomorphism
/// of `A'` into `Z/NZ`, `N <= c_embed·K·|A|`.
///
/// The first attempt uses multiplier 1; later ones draw multipliers from a
/// ChaCha stream seeded with `seed`. Of all attempts that fit the bound the
/// smallest modulus wins.
pub fn ruzsa_embed(
    set: &IntSet,
    k: &Rational,
    c_embed: &Rational,
    retries: usize,
    seed: u64,
) -> Result<Embedding> {
    if set.is_empty() {
        return Err(Error::EmptySet("set to embed"));
    }
    let diff = set.difference_set().len();
    let doubling = rat(diff as i64, set.len() as i64);
    if &doubling > k {
        return Err(Error::Precondition(format!(
            "|A - A| = {diff} exceeds K|A| = {}",
            k * rational::int(set.len() as i64)
        )));
    }
    let lo = set.min().expect("nonempty");
    let g = set.iter().fold(0i64, |g, x| g.gcd(&(x - lo)));
    let g = g.max(1);
    let normalized: Vec<(i64, u64)> = set.iter().map(|x| (x, ((x - lo) / g) as u64)).collect();
    let span = normalized.last().map_or(0, |p| p.1);
    let q = next_prime(2 * span + 2);
    let bound = c_embed * k * rational::int(set.len() as i64);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(FreimanMap, u64, usize)> = None;
    for t in 0..=retries {
        let lambda = if t == 0 { 1 } else { rng.gen_range(1..q) };
        let (kept, n) = attempt(&normalized, q, lambda);
        if 2 * kept.len() < set.len() || rational::int(n as i64) > bound {
            continue;
        }
        if best.as_ref().map_or(true, |b| n < b.0.modulus) {
            best = Some((FreimanMap::new(n, kept)?, lambda, t + 1));
        }
    }
    let Some((map, lambda, attempts)) = best else {
        return Err(Error::NotFound(format!(
            "no embedding with modulus at most {bound} after {} attempts",
            retries + 1
        )));
    };
    let exhaustive = map.len() <= EXHAUSTIVE_LIMIT;
    if !verify_freiman(&map) {
        return Err(Error::NotFound("embedding failed verification".into()));
    }
    Ok(Embedding {
        map,
        doubling,
        k: k.clone(),
        c_embed: c_embed.clone(),
        modulus_bound: bound,
        prime: q,
        multiplier: lambda,
        seed,
        attempts,
        exhaustive,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubsetSearch {
    Found { subset: Vec<i64> },
    None,
    Inconclusive { budget: u64 },
}

/// Backtracking search for `B ⊆ A`, `|B| = h`, sum-free with respect to `A`;
/// the lexicographically first such `B` is returned.
pub fn find_sumfree_subset(set: &IntSet, h: usize, budget: u64) -> Result<SubsetSearch> {
    if h > set.len() {
        return Ok(SubsetSearch::None);
    }
    let xs = set.as_slice();
    let mut chosen = Vec::with_capacity(h);
    let mut visited = 0u64;
    fn rec(
        xs: &[i64],
        set: &IntSet,
        from: usize,
        h: usize,
        chosen: &mut Vec<i64>,
        visited: &mut u64,
        budget: u64,
    ) -> Option<bool> {
        if chosen.len() == h {
            return Some(true);
        }
        for k in from..xs.len() {
            if xs.len() - k < h - chosen.len() {
                break;
            }
            *visited += 1;
            if *visited > budget {
                return None;
            }
            let z = xs[k];
            if chosen.iter().any(|&c| set.contains(c + z)) {
                continue;
            }
            chosen.push(z);
            if rec(xs, set, k + 1, h, chosen, visited, budget)? {
                return Some(true);
            }
            chosen.pop();
        }
        Some(false)
    }
    Ok(match rec(xs, set, 0, h, &mut chosen, &mut visited, budget) {
        Some(true) => {
            let b = IntSet::from_sorted(chosen.clone());
            if !is_sumfree_with_respect_to(&b, set) {
                return Err(Error::Invalid(format!("subset {chosen:?} fails its recheck")));
            }
            SubsetSearch::Found { subset: chosen }
        }
        Some(false) => SubsetSearch::None,
        None => SubsetSearch::Inconclusive { budget },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Embedding,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViaEmbedding {
    pub search: Search,
    pub route: Route,
    #[serde(with = "rational::pair")]
    pub doubling: Rational,
    pub modulus: Option<u64>,
    pub embedded: usize,
}

/// Look for an `h`-configuration in `Y` by embedding `Y` into a cyclic
/// group, searching the image lifted to `[0, N)`, and pulling back. Any
/// pulled-back configuration is rechecked against `Y`. When the image has
/// none, or no embedding is found, the search falls back to `Y` itself.
pub fn find_configuration_via_embedding(
    y: &IntSet,
    h: usize,
    c_embed: &Rational,
    retries: usize,
    seed: u64,
    budget: u64,
) -> Result<ViaEmbedding> {
    if h < 2 {
        return Err(Error::Invalid(format!("h must be at least 2, got {h}")));
    }
    if y.len() < h {
        return Ok(ViaEmbedding {
            search: Search::None { roots: 0 },
            route: Route::Direct,
            doubling: if y.is_empty() {
                rational::zero()
            } else {
                rat(y.difference_set().len() as i64, y.len() as i64)
            },
            modulus: None,
            embedded: 0,
        });
    }
    let doubling = rat(y.difference_set().len() as i64, y.len() as i64);
    let direct = |modulus, embedded| -> Result<ViaEmbedding> {
        Ok(ViaEmbedding {
            search: find_configuration(y, h, budget)?,
            route: Route::Direct,
            doubling: doubling.clone(),
            modulus,
            embedded,
        })
    };
    let emb = match ruzsa_embed(y, &doubling, c_embed, retries, seed) {
        Ok(e) => e,
        Err(Error::NotFound(_)) => return direct(None, 0),
        Err(e) => return Err(e),
    };
    let image: IntSet = emb.map.pairs.iter().map(|p| p.1 as i64).collect();
    let preimage: HashMap<u64, i64> = emb.map.pairs.iter().map(|&(a, f)| (f, a)).collect();
    match find_configuration(&image, h, budget)? {
        Search::Found { configuration } => {
            let s = configuration.s();
            let points: Vec<i64> = (0..s)
                .map(|i| preimage[&((2 * configuration.ns[i] + configuration.a) as u64)])
                .collect();
            let pulled = Configuration::from_points(&points)
                .filter(|c| c.is_nontrivial() && c.lies_in(y))
                .ok_or_else(|| {
                    Error::Invalid(format!("pulled-back points {points:?} do not form a configuration in Y"))
                })?;
            Ok(ViaEmbedding {
                search: Search::Found { configuration: pulled },
                route: Route::Embedding,
                doubling,
                modulus: Some(emb.map.modulus),
                embedded: emb.map.len(),
            })
        }
        _ => direct(Some(emb.map.modulus), emb.map.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[i64]) -> IntSet {
        IntSet::new(xs.to_vec())
    }

    #[test]
    fn sumfree_examples() {
        assert!(!is_sumfree_with_respect_to(&set(&[1, 2]), &set(&[3])));
        assert!(is_sumfree_with_respect_to(&set(&[1, 2]), &set(&[4])));
        assert!(is_sumfree_with_respect_to(&set(&[7]), &set(&[14])));
    }

    #[test]
    fn freiman_examples() {
        let ok = FreimanMap::reduction(&set(&[0, 1, 3]), 7).unwrap();
        assert!(check_freiman_isomorphic(&ok));
        assert!(check_freiman_by_sums(&ok));
        let bad = FreimanMap::reduction(&set(&[0, 1, 2]), 3).unwrap();
        assert!(!check_freiman_isomorphic(&bad));
        assert!(!check_freiman_by_sums(&bad));
        assert!(check_freiman_isomorphic(&FreimanMap::reduction(&set(&[5]), 2).unwrap()));
    }

    #[test]
    fn embeds_an_interval() {
        let a: IntSet = (1..=20).collect();
        let e = ruzsa_embed(&a, &rat(2, 1), &rat(4, 1), 8, 1).unwrap();
        assert!(e.map.len() >= 10);
        assert!(check_freiman_isomorphic(&e.map));
        assert!(rational::int(e.map.modulus as i64) <= e.modulus_bound);
        assert!(ruzsa_embed(&a, &rat(3, 2), &rat(4, 1), 8, 1).is_err());
    }

    #[test]
    fn subset_search() {
        let a = set(&[1, 2, 3, 4, 5]);
        match find_sumfree_subset(&a, 2, 1000).unwrap() {
            SubsetSearch::Found { subset } => {
                assert_eq!(subset.len(), 2);
                assert!(is_sumfree_with_respect_to(&IntSet::new(subset), &a));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            find_sumfree_subset(&set(&[1]), 1, 10).unwrap(),
            SubsetSearch::Found { subset: vec![1] }
        );
        assert_eq!(find_sumfree_subset(&a, 6, 10).unwrap(), SubsetSearch::None);
    }

    #[test]
    fn via_embedding_on_interval() {
        let y: IntSet = (1..=50).collect();
        let r = find_configuration_via_embedding(&y, 2, &rat(4, 1), 8, 3, 1_000_000).unwrap();
        let c = r.search.found().unwrap();
        assert!(c.lies_in(&y));
        assert_eq!(r.route, Route::Embedding);
        let r = find_configuration_via_embedding(&set(&[1, 2]), 3, &rat(4, 1), 8, 3, 1000).unwrap();
        assert!(matches!(r.search, Search::None { .. }));
    }
}
