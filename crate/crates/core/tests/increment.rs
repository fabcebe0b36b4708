mod common;

use common::{greedy_ap_free, members, pow, two_pow};
use linpat::increment::{
    fourier_increment, recheck_certificate, recheck_trace, run, Certificate, ConstantTable, Exhaustion,
    FourierIncrement, Mode, Overrides, RunOptions, RunTrace, Status,
};
use linpat::patterns::{behrend_set, random_set};
use linpat::rational::{int, rat, Rational};
use linpat::reduce::Limits;
use linpat::IntSet;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn overrides(pairs: &[(&str, Rational)]) -> Overrides {
    Overrides::new(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()).unwrap()
}

fn relaxed() -> Overrides {
    overrides(&[
        ("x1", rat(1, 2000)),
        ("xi", rat(1, 4)),
        ("small", int(2)),
        ("local_factor", int(100)),
        ("u2", rat(1, 1000)),
        ("eta_sq", rat(1, 1_000_000)),
        ("inc4", rat(1, 1_000_000)),
        ("inc5", rat(1, 1_000_000)),
        ("c_prime", rat(1, 2)),
    ])
}

/// Density rises and dimension grows only where the trace says it may.
fn check_bookkeeping(trace: &RunTrace, set: &IntSet) {
    for w in trace.records.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let Some(Certificate::DensityIncrement { old_delta, new_delta, threshold, spec, .. }) = &prev.certificate
        else {
            panic!("non-terminal step {} without an increment", prev.step)
        };
        assert_eq!(old_delta, &prev.delta);
        assert_eq!(new_delta, &next.delta);
        assert!(new_delta >= threshold && threshold > old_delta);
        let grew = next.d == prev.d + 1;
        assert_eq!(grew, prev.case == Some(5));
        assert!(grew || next.d == prev.d);
        assert_eq!(spec.dimension(), next.d);
    }
    assert!(recheck_trace(trace, set, &Limits::default()).unwrap());
    let parsed = RunTrace::from_json_lines(&trace.to_json_lines().unwrap()).unwrap();
    assert_eq!(&parsed, trace);
    assert!(recheck_trace(&parsed, set, &Limits::default()).unwrap());
}

#[test]
fn full_set_is_found_at_once() {
    for s in 2..=4 {
        let a: IntSet = (1..=200).collect();
        let trace = run(&a, 200, &RunOptions::new(s, Mode::Faithful)).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.status(), Status::Found);
        let cert = trace.records[0].certificate.as_ref().unwrap();
        assert!(recheck_certificate(cert, &a, &Limits::default()).unwrap());
    }
}

#[test]
fn faithful_behrend_collapses_to_small() {
    let a = behrend_set(1000);
    let trace = run(&a, 1000, &RunOptions::new(2, Mode::Faithful)).unwrap();
    assert_eq!(trace.records.len(), 1);
    let r = &trace.records[0];
    let Some(Certificate::Exhausted { reason, threshold, measured, .. }) = &r.certificate else {
        panic!("{:?}", r.certificate)
    };
    assert_eq!(*reason, Exhaustion::Small);
    assert_eq!(threshold, &(int(128) * pow(&r.delta, -3)));
    assert!(measured <= threshold);
    assert_eq!(trace.exit_code(), 1);
}

#[test]
fn faithful_dense_random_set_finds_progression() {
    // At density 1/2 a 3-AP is present, so the run ends with a configuration.
    let a = random_set(1000, 0.5, 1).unwrap();
    let trace = run(&a, 1000, &RunOptions::new(2, Mode::Faithful)).unwrap();
    assert_eq!(trace.status(), Status::Found);
    check_bookkeeping(&trace, &a);
}

#[test]
fn constant_table_spot_values() {
    let t = ConstantTable::faithful(2, 1, &rat(1, 2));
    assert_eq!(t.x1, two_pow(-145));
    assert_eq!(t.xi, two_pow(-30));
    assert_eq!(t.small, int(1024));
    assert_eq!(t.local_factor, rat(33, 32));
    assert_eq!(t.k_bound, two_pow(55 + 16 + 24));
    let p = ConstantTable::practical(2, 1, &rat(1, 2), &overrides(&[("small", int(4))]));
    assert_eq!(p.small, int(4));
    assert_eq!(p.x1, t.x1);
    assert_eq!(p.overrides, vec!["small".to_string()]);
    assert!(Overrides::new([("bogus".to_string(), int(1))].into_iter().collect()).is_err());
    assert!(Overrides::new([("x1".to_string(), int(0))].into_iter().collect()).is_err());
}

#[test]
fn practical_random_set_terminates_with_checked_certificate() {
    let a = random_set(2000, 0.3, 4).unwrap();
    let trace = run(&a, 2000, &RunOptions::new(2, Mode::Practical)).unwrap();
    assert_eq!(trace.status(), Status::Found);
    check_bookkeeping(&trace, &a);
}

#[test]
fn practical_behrend_trace_recertifies() {
    let a = behrend_set(10_000);
    let mut opts = RunOptions::new(2, Mode::Practical);
    opts.overrides = overrides(&[("x1", rat(1, 400)), ("xi", rat(1, 4)), ("small", int(4))]);
    let trace = run(&a, 10_000, &opts).unwrap();
    assert_ne!(trace.status(), Status::Found);
    assert!(trace.records.iter().any(|r| matches!(r.certificate, Some(Certificate::DensityIncrement { .. }))));
    check_bookkeeping(&trace, &a);
    for r in &trace.records {
        if let Some(Certificate::DensityIncrement { spec, map, hits, size, .. }) = &r.certificate {
            let pts = members(spec);
            assert_eq!(pts.len() as u64, *size as u64);
            assert_eq!(pts.iter().filter(|&&n| a.contains(map.apply(n))).count() as u64, *hits as u64);
        }
    }
}

#[test]
fn translate_increment_through_the_fourier_step() {
    // A sparse progression-free set of multiples of 5; with the local case
    // switched off the increment comes from the Fourier step.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pool: Vec<i64> = (1..=4000).map(|k| 5 * k).collect();
    let a = greedy_ap_free(&mut rng, &pool, 400);
    let mut opts = RunOptions::new(2, Mode::Practical);
    opts.overrides = relaxed();
    let trace = run(&a, 20_000, &opts).unwrap();
    assert!(trace.records.iter().any(|r| r.case == Some(4)), "{:?}", trace.records.iter().map(|r| r.case).collect::<Vec<_>>());
    let r = trace.records.iter().find(|r| r.case == Some(4)).unwrap();
    assert!(matches!(r.bookkeeping.fourier, Some(FourierIncrement::Translate { .. })));
    check_bookkeeping(&trace, &a);
}

#[test]
fn limits_are_recorded_not_raised() {
    let a = behrend_set(10_000);
    let mut opts = RunOptions::new(2, Mode::Practical);
    opts.overrides = overrides(&[("x1", rat(1, 20)), ("xi", rat(1, 2)), ("small", int(2)), ("local_factor", int(8))]);
    opts.limits.counting = 1000;
    let trace = run(&a, 10_000, &opts).unwrap();
    assert_eq!(trace.status(), Status::Limit);
    assert_eq!(trace.exit_code(), 3);
    assert!(trace.records.last().unwrap().bookkeeping.note.is_some());
}

#[test]
fn fourier_increment_on_zero_function() {
    use linpat::bohr::BohrSpec;
    use linpat::function::BoundedFunction;
    let l = Limits::default();
    let lam = BohrSpec::interval(int(200)).unwrap().enumerate(&l).unwrap();
    let l1 = BohrSpec::interval(int(4)).unwrap().enumerate(&l).unwrap();
    let r = fourier_increment(&BoundedFunction::zero(), &lam, &l1, &rat(1, 50), 0.3, &rat(1, 4), 64, false, &l).unwrap();
    assert!(matches!(r, FourierIncrement::HypothesisNotMet { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn traces_keep_their_bookkeeping(seed in any::<u64>(), n in 2000i64..=8000, small in 2i64..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool: Vec<i64> = (1..=n).collect();
        let a = greedy_ap_free(&mut rng, &pool, 300);
        let mut opts = RunOptions::new(2, Mode::Practical);
        opts.overrides = overrides(&[("x1", rat(1, 400)), ("xi", rat(1, 4)), ("small", int(small))]);
        let trace = run(&a, n, &opts).unwrap();
        prop_assert_ne!(trace.status(), Status::Found);
        check_bookkeeping(&trace, &a);
    }
}
