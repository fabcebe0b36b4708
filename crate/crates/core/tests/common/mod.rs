//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's own counting or membership code.
#![allow(dead_code)]

use linpat::bohr::BohrSpec;
use linpat::rational::{rat, Rational};
use linpat::IntSet;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Distance from `x` to the nearest integer.
pub fn dist_to_int(x: &Rational) -> Rational {
    let f = x - Rational::from_integer(x.numer().div_floor(x.denom()));
    let g = Rational::one() - &f;
    if f < g {
        f
    } else {
        g
    }
}

pub fn member(spec: &BohrSpec, n: i64) -> bool {
    let nq = Rational::from_integer(BigInt::from(n));
    nq.abs() <= spec.m
        && spec
            .theta
            .iter()
            .all(|t| dist_to_int(&(&nq * t)) <= spec.eps)
}

pub fn members(spec: &BohrSpec) -> Vec<i64> {
    let m = spec.m.numer().div_floor(spec.m.denom()).to_i64().unwrap();
    (-m..=m).filter(|&n| member(spec, n)).collect()
}

/// Smallest `ρ` with `n ∈ ρΛ`.
pub fn radius(spec: &BohrSpec, n: i64) -> Rational {
    let nq = Rational::from_integer(BigInt::from(n));
    let mut r = nq.abs() / &spec.m;
    for t in &spec.theta {
        let x = dist_to_int(&(&nq * t)) / &spec.eps;
        if x > r {
            r = x;
        }
    }
    r
}

/// Regularity in the sense `(1-100d|c|)|Λ| <= |(1+c)Λ| <= (1+100d|c|)|Λ|`
/// for all `|c| <= 1/100d`, decided from the sorted radii of the
/// integers in the widest dilate.
pub fn is_regular(spec: &BohrSpec) -> bool {
    let d = spec.theta.len() as i64;
    let w = rat(1, 100 * d);
    let one = Rational::one();
    let k = Rational::from_integer(BigInt::from(100 * d));
    let top = &spec.m * (&one + &w);
    let lim = top.numer().div_floor(top.denom()).to_i64().unwrap();
    let mut radii: Vec<Rational> = (-lim..=lim).map(|n| radius(spec, n)).collect();
    radii.sort();
    let count_le = |t: &Rational| radii.partition_point(|r| r <= t);
    let count_lt = |t: &Rational| radii.partition_point(|r| r < t);
    let base = Rational::from_integer(BigInt::from(count_le(&one)));
    let mut levels = radii.clone();
    levels.dedup();
    for r in &levels {
        if r > &one && r <= &(&one + &w) {
            let c = r - &one;
            let n = Rational::from_integer(BigInt::from(count_le(r)));
            if n > (&one + &k * &c) * &base {
                return false;
            }
        }
        if r > &(&one - &w) && r <= &one {
            let c = &one - r;
            let n = Rational::from_integer(BigInt::from(count_lt(r)));
            if n < (&one - &k * &c) * &base {
                return false;
            }
        }
    }
    true
}

pub fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> Rational {
    rat(rng.gen_range(lo..=hi), den)
}

/// A valid spec with `d` frequencies, `eps <= 1/2` and `1 <= M <= m_max`.
pub fn random_spec(rng: &mut ChaCha8Rng, d: usize, m_max: i64) -> BohrSpec {
    let theta = (0..d)
        .map(|_| {
            let q = rng.gen_range(2..=60);
            rat(rng.gen_range(0..q), q)
        })
        .collect();
    let b = rng.gen_range(2..=24);
    let eps = rat(rng.gen_range(1..=b / 2), b);
    let m = rat(rng.gen_range(2..=2 * m_max), 2);
    BohrSpec::new(theta, eps, m).unwrap()
}

/// Nontrivial 3-term progressions `x < y < z`, `x + z = 2y`, by pairs.
pub fn three_aps(set: &IntSet) -> u64 {
    let xs = set.as_slice();
    let mut count = 0;
    for (i, &x) in xs.iter().enumerate() {
        for &z in &xs[i + 1..] {
            if (x + z) % 2 == 0 && set.contains((x + z) / 2) {
                count += 1;
            }
        }
    }
    count
}

/// A 3-AP-free subset of `pool`, built greedily in a random order.
pub fn greedy_ap_free(rng: &mut ChaCha8Rng, pool: &[i64], tries: usize) -> IntSet {
    let mut chosen: Vec<i64> = Vec::new();
    let mut have = std::collections::HashSet::new();
    for _ in 0..tries {
        let x = pool[rng.gen_range(0..pool.len())];
        if have.contains(&x) {
            continue;
        }
        let bad = chosen.iter().any(|&y| {
            have.contains(&(2 * y - x))
                || have.contains(&(2 * x - y))
                || ((x + y) % 2 == 0 && have.contains(&((x + y) / 2)))
        });
        if !bad {
            chosen.push(x);
            have.insert(x);
        }
    }
    IntSet::new(chosen)
}

pub fn unit_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if z.norm() <= 1.0 {
            return z;
        }
    }
}

/// `q^e` through numerator and denominator powers.
pub fn pow(q: &Rational, e: i64) -> Rational {
    let (n, d) = (q.numer().clone(), q.denom().clone());
    let e_abs = e.unsigned_abs() as u32;
    let r = Rational::new(num_traits::pow(n, e_abs as usize), num_traits::pow(d, e_abs as usize));
    if e >= 0 {
        r
    } else {
        Rational::one() / r
    }
}

pub fn two_pow(e: i64) -> Rational {
    pow(&Rational::from_integer(BigInt::from(2)), e)
}

