//! Number-theoretic transform over `Z/998244353`, used for exact integer
//! convolutions of indicator vectors.

const MOD: u64 = 998_244_353;
const ROOT: u64 = 3;

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    b %= MOD;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % MOD;
        }
        b = b * b % MOD;
        e >>= 1;
    }
    r
}

fn transform(a: &mut [u64], invert: bool) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(ROOT, (MOD - 1) / len as u64);
        if invert {
            w = pow_mod(w, MOD - 2);
        }
        for chunk in a.chunks_mut(len) {
            let mut wn = 1;
            let half = len / 2;
            for k in 0..half {
                let u = chunk[k];
                let v = chunk[k + half] * wn % MOD;
                chunk[k] = (u + v) % MOD;
                chunk[k + half] = (u + MOD - v) % MOD;
                wn = wn * w % MOD;
            }
        }
        len <<= 1;
    }
    if invert {
        let inv = pow_mod(n as u64, MOD - 2);
        for x in a.iter_mut() {
            *x = *x * inv % MOD;
        }
    }
}

/// Exact cyclic-free convolution. Every output coefficient must be below
/// the modulus, which holds for 0/1 inputs shorter than ~10^9.
pub fn convolve(a: &[u64], b: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    assert!(n <= 1 << 23, "convolution length {n} exceeds the transform size");
    let mut fa = a.to_vec();
    fa.resize(n, 0);
    let mut fb = b.to_vec();
    fb.resize(n, 0);
    transform(&mut fa, false);
    transform(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * y % MOD;
    }
    transform(&mut fa, true);
    fa.truncate(out_len);
    fa
}
