mod common;

use common::{members, unit_disk};
use linpat::bohr::{BohrSet, BohrSpec};
use linpat::function::{e, BoundedFunction};
use linpat::gowers::{
    check_inverse_theorem, fourier_sup, inverse_average, u2_correlation, u2_direct, InverseStatus,
};
use linpat::rational::{int, rat};
use linpat::reduce::Limits;
use linpat::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interval(m: i64) -> BohrSet {
    BohrSpec::interval(int(m)).unwrap().enumerate(&Limits::default()).unwrap()
}

fn ones(lo: i64, hi: i64) -> BoundedFunction {
    BoundedFunction::new((lo..=hi).map(|n| (n, Complex64::new(1.0, 0.0))).collect()).unwrap()
}

/// The five-fold average written out with plain loops.
fn five_loop(f: &BoundedFunction, l: &[i64], l1: &[i64], l2: &[i64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &a in l {
        for &n1 in l1 {
            for &m1 in l1 {
                for &n2 in l2 {
                    for &m2 in l2 {
                        acc += f.eval(a + n1 + n2)
                            * (f.eval(a + n1 + m2) * f.eval(a + m1 + n2)).conj()
                            * f.eval(a + m1 + m2);
                    }
                }
            }
        }
    }
    acc.re / (l.len() * l1.len() * l1.len() * l2.len() * l2.len()) as f64
}

#[test]
fn constant_and_zero_functions() {
    let l = Limits::default();
    let (a, b, c) = (interval(4), interval(2), interval(1));
    let f = ones(-7, 7);
    assert!((u2_direct(&f, &a, &b, &c, &l).unwrap().fourth_power - 1.0).abs() < 1e-12);
    assert!((u2_correlation(&f, &a, &b, &c, &l).unwrap().fourth_power - 1.0).abs() < 1e-12);
    let z = BoundedFunction::zero();
    assert_eq!(u2_correlation(&z, &a, &b, &c, &l).unwrap().norm, 0.0);
    assert_eq!(u2_direct(&z, &a, &b, &c, &l).unwrap().norm, 0.0);
}

#[test]
fn plus_minus_one_matches_five_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let l = Limits::default();
    let (a, b, c) = (interval(4), interval(2), interval(1));
    let f = BoundedFunction::new(
        (-7..=7)
            .map(|n| (n, Complex64::new(if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0)))
            .collect(),
    )
    .unwrap();
    let oracle = five_loop(&f, a.elements(), b.elements(), c.elements());
    let direct = u2_direct(&f, &a, &b, &c, &l).unwrap().fourth_power;
    assert!((direct - oracle.max(0.0)).abs() < 1e-12, "{direct} vs {oracle}");
}

#[test]
fn capacity_guard() {
    let l = Limits { counting: 100, ..Limits::default() };
    let (a, b, c) = (interval(10), interval(3), interval(2));
    let f = ones(-15, 15);
    assert!(matches!(u2_direct(&f, &a, &b, &c, &l), Err(Error::Capacity { .. })));
}

#[test]
fn fourier_sup_examples() {
    let l2 = interval(5);
    let f = ones(10, 20);
    let s = fourier_sup(&f, 15, &l2, 64).unwrap();
    assert_eq!(s.y_star, int(0));
    assert!((s.value - 1.0).abs() < 1e-12);

    let beta = rat(3, 16);
    let ch = BoundedFunction::new((-30..=30).map(|n| (n, e(-(n as f64) * 3.0 / 16.0))).collect()).unwrap();
    let s = fourier_sup(&ch, 7, &l2, 64).unwrap();
    assert_eq!(s.y_star, beta);
    assert!((s.value - 1.0).abs() < 1e-12);

    assert!(matches!(fourier_sup(&f, 0, &l2, 8), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn fourier_sup_within_certified_error_of_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let l2 = interval(10);
    let f = BoundedFunction::new(
        (-10..=10)
            .map(|n| (n, Complex64::new(if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0)))
            .collect(),
    )
    .unwrap();
    let s = fourier_sup(&f, 0, &l2, 10_000).unwrap();
    let dense_points = 1_000_000;
    let mut best: f64 = 0.0;
    for k in 0..dense_points {
        let y = k as f64 / dense_points as f64;
        let v: Complex64 = (-10..=10).map(|n| f.eval(n) * e(n as f64 * y)).sum();
        best = best.max(v.norm() / 21.0);
    }
    assert!(s.value <= best + 1e-12);
    assert!(best <= s.value + s.certified_error);
}

#[test]
fn inverse_average_examples() {
    let (l, l2) = (interval(5), interval(3));
    assert!((inverse_average(&ones(-8, 8), &l, &l2, 64).unwrap().value - 1.0).abs() < 1e-12);
    assert_eq!(inverse_average(&BoundedFunction::zero(), &l, &l2, 64).unwrap().value, 0.0);
    let ch = BoundedFunction::character(0.123, &(-8..=8).collect::<Vec<_>>());
    let avg = inverse_average(&ch, &l, &l2, 64).unwrap();
    assert!(avg.value <= 1.0 + 1e-12 && avg.value + avg.slack >= 1.0 - 1e-12);
}

#[test]
fn inverse_check_pass_and_hypothesis_failure() {
    let l = Limits::default();
    let spec = BohrSpec::new(vec![int(1)], rat(1, 2), int(60_000)).unwrap();
    let (alpha, _) = linpat::bohr::find_regular_alpha(&spec, &l).unwrap();
    let spec = spec.dilate(&alpha).unwrap();
    let eta = 0.5;
    let c1_max = rat(1, 256 * 5000);
    let (c1, s1, _) = linpat::bohr::regular_dilation(&spec, &(&c1_max / int(2)), &l).unwrap();
    let (c2, _, _) = linpat::bohr::regular_dilation(&s1, &rat(1, 3200), &l).unwrap();
    let reach = members(&spec).last().copied().unwrap() + 20;
    let f = ones(-reach, reach);
    let ok = check_inverse_theorem(&f, &spec, &c1, &c2, eta, 64, &l).unwrap();
    assert_eq!(ok.status, InverseStatus::Pass, "{ok:?}");
    let big_c2 = rat(1, 100);
    let bad = check_inverse_theorem(&f, &spec, &c1, &big_c2, eta, 64, &l).unwrap();
    assert_eq!(bad.status, InverseStatus::HypothesisNotMet);
    assert!(!bad.c2_within_bound);
}

fn random_f(seed: u64, reach: i64) -> BoundedFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BoundedFunction::new((-reach..=reach).map(|n| (n, unit_disk(&mut rng))).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norm_bounds_and_symmetries(m in 2i64..=12, m1 in 1i64..=4, m2 in 0i64..=3, beta in 0.0f64..1.0, seed in any::<u64>()) {
        let l = Limits::default();
        let (a, b, c) = (interval(m), interval(m1), interval(m2.max(1)));
        let f = random_f(seed, m + m1 + m2.max(1));
        let base = u2_correlation(&f, &a, &b, &c, &l).unwrap();
        prop_assert!(base.norm >= 0.0 && base.norm <= 1.0 + 1e-9);
        let direct = u2_direct(&f, &a, &b, &c, &l).unwrap();
        prop_assert!((direct.fourth_power - base.fourth_power).abs() <= 1e-9 * base.fourth_power.max(1.0));
        let modulated = u2_correlation(&f.modulate(beta), &a, &b, &c, &l).unwrap();
        prop_assert!((modulated.fourth_power - base.fourth_power).abs() <= 1e-9);
        let conj = u2_correlation(&f.conj(), &a, &b, &c, &l).unwrap();
        prop_assert!((conj.norm - base.norm).abs() <= 1e-9);
    }

    #[test]
    fn fourier_sup_is_bounded(seed in any::<u64>(), m2 in 1i64..=12, a in -20i64..=20) {
        let l2 = interval(m2);
        let f = random_f(seed, 40);
        let s = fourier_sup(&f, a, &l2, 4 * (m2 as usize + 1)).unwrap();
        prop_assert!(s.value >= 0.0 && s.value <= 1.0 + s.certified_error);
    }
}
