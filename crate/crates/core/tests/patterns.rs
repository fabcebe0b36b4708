mod common;

use common::{greedy_ap_free, members, three_aps, unit_disk};
use linpat::bohr::{find_regular_alpha, BohrSet, BohrSpec};
use linpat::function::BoundedFunction;
use linpat::patterns::{
    behrend_choice, behrend_set, behrend_shells, check_von_neumann, count_3aps_direct, count_3aps_fft,
    count_t_s, dichotomy, find_configuration, find_configuration_in_bohr, random_set, recheck_dichotomy,
    regular_chain, Configuration, DichotomyOptions, DichotomyOutcome, DichotomyThresholds, FunctionFamily,
    Search,
};
use linpat::rational::{int, rat, Rational};
use linpat::reduce::Limits;
use linpat::{Error, IntSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn set(xs: &[i64]) -> IntSet {
    IntSet::new(xs.to_vec())
}

fn interval(m: i64) -> BohrSet {
    BohrSpec::interval(int(m)).unwrap().enumerate(&Limits::default()).unwrap()
}

/// Some nontrivial s-configuration in `A`, by the definition with `n_1 = 0`.
fn has_configuration(a: &IntSet, s: usize, span: i64) -> bool {
    fn extend(a: &IntSet, base: i64, ns: &mut Vec<i64>, s: usize, span: i64) -> bool {
        if ns.len() == s {
            return true;
        }
        for n in -span..=span {
            if ns.contains(&n) {
                continue;
            }
            let fits = a.contains(base + 2 * n) && ns.iter().all(|&m| a.contains(base + n + m));
            if fits {
                ns.push(n);
                if extend(a, base, ns, s, span) {
                    return true;
                }
                ns.pop();
            }
        }
        false
    }
    a.iter().any(|base| extend(a, base, &mut vec![0], s, span))
}

#[test]
fn configuration_elements() {
    assert_eq!(Configuration::new(1, vec![0, 1]).elements(), vec![1, 2, 3]);
    assert_eq!(Configuration::new(0, vec![0, 1, 2]).elements(), vec![0, 1, 2, 2, 3, 4]);
    let trivial = Configuration::new(5, vec![0, 0]);
    assert_eq!(trivial.elements(), vec![5, 5, 5]);
    assert!(!trivial.is_nontrivial());
}

#[test]
fn finder_examples() {
    let r = find_configuration(&set(&[1, 2, 3]), 2, 1000).unwrap();
    assert_eq!(r.found(), Some(&Configuration::new(1, vec![0, 1])));
    let r = find_configuration(&set(&[0, 1, 2, 3, 4]), 3, 1000).unwrap();
    let c = r.found().unwrap();
    assert!(c.is_nontrivial() && c.lies_in(&set(&[0, 1, 2, 3, 4])));
    assert!(matches!(find_configuration(&set(&[1, 2, 4]), 2, 1000).unwrap(), Search::None { .. }));
    assert!(matches!(find_configuration(&set(&[1, 2]), 1, 1000), Err(Error::Invalid(_))));
}

#[test]
fn bohr_restricted_finder() {
    let a: IntSet = (-20..=20).collect();
    let r = find_configuration_in_bohr(&a, &interval(5), &[interval(2), interval(2)], 10_000).unwrap();
    let c = r.found().unwrap();
    assert!(c.a.abs() <= 5 && c.ns.iter().all(|n| n.abs() <= 2) && c.ns[0] != c.ns[1]);
    assert!(c.lies_in(&a));
}

#[test]
fn t_s_examples() {
    let l = Limits::default();
    let (outer, inner) = (interval(6), vec![interval(3), interval(2)]);
    let one = BoundedFunction::new((-20..=20).map(|n| (n, num_complex::Complex64::new(1.0, 0.0))).collect()).unwrap();
    let fam = FunctionFamily::uniform(2, &one).unwrap();
    assert_eq!(count_t_s(&fam, &outer, &inner, &l).unwrap().value.re, 1.0);
    let vn = check_von_neumann(&fam, &outer, &inner, 1, 2, &l).unwrap();
    assert!(vn.holds && (vn.t_abs - 1.0).abs() < 1e-12 && (vn.norm - 1.0).abs() < 1e-12);

    let fam = FunctionFamily::from_fn(2, |i, j| if (i, j) == (1, 2) { BoundedFunction::zero() } else { one.clone() }).unwrap();
    assert_eq!(count_t_s(&fam, &outer, &inner, &l).unwrap().value.norm(), 0.0);
    let vn = check_von_neumann(&fam, &outer, &inner, 1, 2, &l).unwrap();
    assert!(vn.holds && vn.t_abs == 0.0 && vn.norm == 0.0);
}

#[test]
fn dichotomy_small_bohr() {
    // |Λ_2| = 3 against the threshold 32·4·2³ that δ = 1/2 would give.
    let l = Limits::default();
    let lambda = BohrSpec::interval(int(15_000)).unwrap();
    let a: IntSet = behrend_set(10_000).iter().map(|x| x - 5000).collect();
    let cs = [rat(1, 101), rat(1, 101)];
    let opts = DichotomyOptions {
        thresholds: Some(DichotomyThresholds {
            faithful: false,
            small: int(1024),
            local_factor: rat(33, 32),
            u2: rat(1, 1024),
            c1_bound: None,
        }),
        require_regular: false,
        ..DichotomyOptions::default()
    };
    let r = dichotomy(&a, &lambda, 2, &cs, &opts).unwrap();
    assert!(matches!(r.outcome, DichotomyOutcome::SmallBohr { size: 3, .. }), "{:?}", r.outcome);
    assert!(recheck_dichotomy(&r, &a, &lambda, &l).unwrap());
    assert!(matches!(dichotomy(&a, &lambda, 2, &[rat(1, 8), rat(1, 101)], &opts), Err(Error::Precondition(_))));
}

#[test]
fn dichotomy_reports_witness() {
    let a: IntSet = (-5..=5).collect();
    let lambda = BohrSpec::interval(int(5)).unwrap();
    let opts = DichotomyOptions { require_regular: false, ..DichotomyOptions::default() };
    match dichotomy(&a, &lambda, 2, &[rat(1, 500), rat(1, 200)], &opts) {
        Err(Error::ConfigurationExists(c)) => assert!(c.is_nontrivial() && c.lies_in(&a)),
        other => panic!("unexpected {other:?}"),
    }
}

fn regular_setup(n: i64, seed: u64) -> (IntSet, BohrSpec) {
    let l = Limits::default();
    let raw = BohrSpec::interval(int(n)).unwrap();
    let spec = raw.dilate(&find_regular_alpha(&raw, &l).unwrap().0).unwrap();
    let pool = members(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (greedy_ap_free(&mut rng, &pool, 4 * pool.len()), spec)
}

#[test]
fn dichotomy_on_behrend_in_interval() {
    let l = Limits::default();
    let raw = BohrSpec::interval(int(2000)).unwrap();
    let spec = raw.dilate(&find_regular_alpha(&raw, &l).unwrap().0).unwrap();
    let a: IntSet = behrend_set(1500).iter().map(|x| x - 750).collect();
    assert!(a.iter().all(|x| spec.contains(x)));
    let delta = rat(a.len() as i64, members(&spec).len() as i64);
    let xs = [&delta * &delta / int(3200 * 8), rat(1, 200)];
    let cs: Vec<Rational> = regular_chain(&spec, &xs, &l).unwrap().into_iter().map(|p| p.0).collect();
    let r = dichotomy(&a, &spec, 2, &cs, &DichotomyOptions::default()).unwrap();
    assert!(!matches!(r.outcome, DichotomyOutcome::TheoremViolation { .. }));
    assert!(r.noc_holds);
    assert!(recheck_dichotomy(&r, &a, &spec, &l).unwrap());
}

#[test]
fn dichotomy_relaxed_thresholds_reach_every_case() {
    let l = Limits::default();
    let (a, spec) = regular_setup(5000, 5);
    let cs = [rat(1, 101), rat(1, 101)];
    let with = |small: i64, local: Rational, u2: Rational| DichotomyOptions {
        thresholds: Some(DichotomyThresholds { faithful: false, small: int(small), local_factor: local, u2, c1_bound: None }),
        limits: l.clone(),
        require_regular: false,
    };
    let r = dichotomy(&a, &spec, 2, &cs, &with(0, int(1), int(1))).unwrap();
    assert!(matches!(r.outcome, DichotomyOutcome::LocalIncrement { .. }), "{:?}", r.outcome);
    assert!(recheck_dichotomy(&r, &a, &spec, &l).unwrap());
    let r = dichotomy(&a, &spec, 2, &cs, &with(0, int(1000), rat(1, 1_000_000))).unwrap();
    assert!(matches!(r.outcome, DichotomyOutcome::LargeU2 { i: 1, j: 2, .. }), "{:?}", r.outcome);
    assert!(recheck_dichotomy(&r, &a, &spec, &l).unwrap());
    let r = dichotomy(&a, &spec, 2, &cs, &with(0, int(1000), int(2))).unwrap();
    assert!(matches!(r.outcome, DichotomyOutcome::TheoremViolation { .. }));
}

#[test]
fn behrend_examples() {
    for n in [1u64, 2, 10, 100, 1000] {
        let b = behrend_set(n);
        assert!(b.iter().all(|x| 1 <= x && x as u64 <= n));
        assert_eq!(three_aps(&b), 0);
    }
    assert!(matches!(find_configuration(&behrend_set(1000), 2, 1_000_000).unwrap(), Search::None { .. }));
    let c = behrend_choice(5000);
    let shells = behrend_shells(5000, c.dim, c.digits);
    assert_eq!(shells.values().copied().max(), Some(c.size));
    assert_eq!(shells[&c.radius], c.size);
    assert_eq!(behrend_set(5000).len(), c.size);
}

#[test]
fn random_set_examples() {
    assert!(random_set(100, 0.0, 1).unwrap().is_empty());
    assert_eq!(random_set(100, 1.0, 1).unwrap().as_slice(), (1..=100).collect::<Vec<_>>().as_slice());
    assert_eq!(random_set(500, 0.3, 9).unwrap(), random_set(500, 0.3, 9).unwrap());
    assert!(random_set(10, 1.5, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn finder_agrees_with_definition(xs in prop::collection::btree_set(0i64..24, 0..14), s in 2usize..=3) {
        let a: IntSet = xs.into_iter().collect();
        let r = find_configuration(&a, s, 1_000_000).unwrap();
        let oracle = has_configuration(&a, s, 24);
        match r {
            Search::Found { configuration } => {
                prop_assert!(oracle);
                prop_assert!(configuration.is_nontrivial() && configuration.lies_in(&a));
                prop_assert_eq!(configuration.ns.len(), s);
            }
            Search::None { .. } => prop_assert!(!oracle),
            Search::Inconclusive { .. } => prop_assert!(false, "budget too small"),
        }
    }

    #[test]
    fn three_ap_counts_agree(xs in prop::collection::btree_set(-300i64..300, 0..120)) {
        let a: IntSet = xs.into_iter().collect();
        let oracle = three_aps(&a);
        prop_assert_eq!(count_3aps_direct(&a), oracle);
        prop_assert_eq!(count_3aps_fft(&a), oracle);
    }

    #[test]
    fn t_s_is_bounded_and_von_neumann_holds(seed in any::<u64>(), m in 2i64..=10, s in 2usize..=3) {
        let l = Limits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outer = interval(m);
        let inner: Vec<BohrSet> = (0..s).map(|k| interval((m / (k as i64 + 2)).max(1))).collect();
        let reach = m + 2 * inner[0].max_abs() as i64;
        let fam = FunctionFamily::from_fn(s, |_, _| {
            BoundedFunction::new((-reach..=reach).map(|n| (n, unit_disk(&mut rng))).collect()).unwrap()
        }).unwrap();
        let t = count_t_s(&fam, &outer, &inner, &l).unwrap();
        prop_assert!(t.value.norm() <= 1.0 + 1e-12);
        for i in 1..=s {
            for j in i + 1..=s {
                let c = check_von_neumann(&fam, &outer, &inner, i, j, &l).unwrap();
                prop_assert!(c.holds && c.t_abs <= c.norm + 1e-9);
            }
        }
    }
}
