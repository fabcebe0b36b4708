use serde::{Deserialize, Serialize};

use crate::bohr::{dilate_elements, regular_dilation, BohrSet, BohrSpec};
use crate::error::{Error, Result};
use crate::function::BoundedFunction;
use crate::gowers::{check_inverse_theorem, u2_correlation, InverseStatus};
use crate::intset::IntSet;
use crate::patterns::{find_configuration, regular_chain, PairNorm, Search};
use crate::rational::{self, int, rat, Rational};
use crate::reduce::Limits;

use super::certificate::{recheck_certificate, AffineMap, Certificate, Exhaustion};
use super::constants::{ConstantTable, Mode, Overrides};
use super::fourier::{best_translate, fourier_increment, FourierIncrement};

/// The current Bohr set, the set inside it in local coordinates, and the
/// map back to the original coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationState {
    pub step: usize,
    pub spec: BohrSpec,
    pub map: AffineMap,
    pub members: IntSet,
    pub size: usize,
    pub delta: Rational,
}

impl IterationState {
    /// `Λ_0 = [-N, N]` (as `Λ_{1, 1/2, N + 1/2}`) holding `A ∩ [-N, N]`.
    pub fn initial(set: &IntSet, n: i64, limits: &Limits) -> Result<Self> {
        if n < 1 {
            return Err(Error::Invalid(format!("N must be positive, got {n}")));
        }
        let spec = BohrSpec::interval(rat(2 * n + 1, 2))?;
        Self::from_parts(0, spec, AffineMap::IDENTITY, set, limits)
    }

    fn from_parts(
        step: usize,
        spec: BohrSpec,
        map: AffineMap,
        original: &IntSet,
        limits: &Limits,
    ) -> Result<Self> {
        let l = spec.enumerate(limits)?;
        let members: IntSet = l
            .elements()
            .iter()
            .copied()
            .filter(|&n| original.contains(map.apply(n)))
            .collect();
        if members.is_empty() {
            return Err(Error::EmptySet("set restricted to the starting Bohr set"));
        }
        Ok(IterationState {
            step,
            delta: rat(members.len() as i64, l.len() as i64),
            size: l.len(),
            spec,
            map,
            members,
        })
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub s: usize,
    pub mode: Mode,
    pub overrides: Overrides,
    pub limits: Limits,
    pub max_steps: usize,
    /// Minimum Fourier grid; raised to the admissible size when needed.
    pub grid: usize,
}

impl RunOptions {
    pub fn new(s: usize, mode: Mode) -> Self {
        RunOptions {
            s,
            mode,
            overrides: Overrides::default(),
            limits: Limits::default(),
            max_steps: 64,
            grid: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Continue,
    Found,
    Exhausted,
    Limit,
}

impl Status {
    /// 0 found, 1 exhausted, 3 limit.
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Found => 0,
            Status::Exhausted => 1,
            Status::Continue | Status::Limit => 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InverseSummary {
    pub status: Option<InverseStatus>,
    #[serde(with = "rational::real12")]
    pub conclusion: f64,
    #[serde(with = "rational::real12")]
    pub threshold: f64,
}

/// Side measurements of a step, kept for inspection. The pass/fail flags
/// compare against the closed-form bounds even in practical mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bookkeeping {
    pub constants: Option<ConstantTable>,
    #[serde(with = "rational::pair_vec")]
    pub cs: Vec<Rational>,
    /// `|Λ|, |Λ_1|, …, |Λ_s|`.
    pub sizes: Vec<usize>,
    pub u2: Option<PairNorm>,
    pub inverse: Option<InverseSummary>,
    pub fourier: Option<FourierIncrement>,
    pub dimension_ok: Option<bool>,
    pub di1: Option<bool>,
    pub di2: Option<bool>,
    pub shrink_ok: Option<bool>,
    pub k_within_bound: Option<bool>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub status: Status,
    /// Which alternative of the iterative step applied, 1 to 5.
    pub case: Option<u8>,
    pub d: usize,
    #[serde(with = "rational::pair")]
    pub delta: Rational,
    #[serde(with = "rational::pair")]
    pub eps: Rational,
    #[serde(rename = "M", with = "rational::pair")]
    pub m: Rational,
    pub certificate: Option<Certificate>,
    pub bookkeeping: Bookkeeping,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
}

impl RunTrace {
    pub fn status(&self) -> Status {
        self.records.last().map_or(Status::Limit, |r| r.status)
    }

    pub fn exit_code(&self) -> i32 {
        self.status().exit_code()
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(RunTrace { records })
    }
}

pub struct StepOutcome {
    pub record: StepRecord,
    pub next: Option<IterationState>,
}

struct Chain {
    cs: Vec<Rational>,
    specs: Vec<BohrSpec>,
    sets: Vec<BohrSet>,
}

fn record(state: &IterationState, status: Status, case: Option<u8>) -> StepRecord {
    StepRecord {
        step: state.step,
        status,
        case,
        d: state.dimension(),
        delta: state.delta.clone(),
        eps: state.spec.eps.clone(),
        m: state.spec.m.clone(),
        certificate: None,
        bookkeeping: Bookkeeping::default(),
    }
}

/// Restrict to `base + scale·Λ'` and package the increment.
#[allow(clippy::too_many_arguments)]
fn increment(
    state: &IterationState,
    step_case: u8,
    spec: BohrSpec,
    new_set: &BohrSet,
    base: i64,
    scale: i64,
    threshold: Rational,
    table: &ConstantTable,
) -> (Certificate, IterationState) {
    let local: Vec<i64> = new_set
        .elements()
        .iter()
        .copied()
        .filter(|&n| state.members.contains(base + scale * n))
        .collect();
    let new_delta = rat(local.len() as i64, new_set.len() as i64);
    let map = state.map.then(base, scale);
    let cert = Certificate::DensityIncrement {
        step_case,
        parent: state.spec.clone(),
        parent_map: state.map,
        spec: spec.clone(),
        base,
        scale,
        map,
        old_delta: state.delta.clone(),
        new_delta: new_delta.clone(),
        threshold,
        hits: local.len(),
        size: new_set.len(),
        constants: table.clone(),
    };
    let next = IterationState {
        step: state.step + 1,
        spec,
        map,
        size: new_set.len(),
        members: IntSet::from_sorted(local),
        delta: new_delta,
    };
    (cert, next)
}

fn exhausted(
    state: &IterationState,
    reason: Exhaustion,
    chain_cs: &[Rational],
    measured: Rational,
    threshold: &Rational,
    detail: String,
    table: &ConstantTable,
) -> Certificate {
    Certificate::Exhausted {
        reason,
        spec: state.spec.clone(),
        map: state.map,
        delta: state.delta.clone(),
        cs: chain_cs.to_vec(),
        measured,
        threshold: threshold.clone(),
        detail,
        constants: table.clone(),
    }
}

fn build_chain(state: &IterationState, table: &ConstantTable, limits: &Limits) -> Result<Chain> {
    let links = regular_chain(&state.spec, &table.xs(), limits)?;
    let (cs, specs): (Vec<_>, Vec<_>) = links.into_iter().unzip();
    let sets = specs
        .iter()
        .map(|sp| sp.enumerate(limits))
        .collect::<Result<Vec<_>>>()?;
    Ok(Chain { cs, specs, sets })
}

/// Best `(density, a, i)` over `a + 2·Λ_i ⊆ Λ`: highest density, then
/// smallest `a`, then smallest `i`.
fn best_doubled(state: &IterationState, l: &BohrSet, chain: &Chain) -> Option<(Rational, i64, usize)> {
    use rayon::prelude::*;
    let mut best: Option<(Rational, i64, usize)> = None;
    for (k, li) in chain.sets.iter().enumerate() {
        let doubled = dilate_elements(li.elements());
        let found: Vec<Option<usize>> = l
            .elements()
            .par_iter()
            .map(|&a| {
                doubled
                    .iter()
                    .all(|&n| l.contains(a + n))
                    .then(|| state.members.count_in_translate(a, &doubled))
            })
            .collect();
        for (&a, h) in l.elements().iter().zip(&found) {
            let Some(h) = *h else { continue };
            let density = rat(h as i64, li.len() as i64);
            let better = match &best {
                None => true,
                Some((bd, ba, _)) => density > *bd || (density == *bd && a < *ba),
            };
            if better {
                best = Some((density, a, k + 1));
            }
        }
    }
    best
}

fn product(cs: &[Rational]) -> Rational {
    cs.iter().fold(rational::one(), |acc, c| acc * c)
}

/// Run one iteration from `state`.
pub fn iterate_step(state: &IterationState, opts: &RunOptions) -> Result<StepOutcome> {
    let limits = &opts.limits;
    let s = opts.s;
    let done = |mut rec: StepRecord, cert: Certificate| {
        rec.certificate = Some(cert);
        Ok(StepOutcome { record: rec, next: None })
    };

    match find_configuration(&state.members, s, limits.search)? {
        Search::Found { configuration } => {
            let cert = Certificate::found(&configuration.map_affine(state.map.base, state.map.scale));
            return done(record(state, Status::Found, Some(1)), cert);
        }
        Search::Inconclusive { budget, .. } => {
            return Err(Error::Capacity {
                what: "configuration search",
                needed: budget as u128 + 1,
                limit: budget as u128,
            })
        }
        Search::None { .. } => {}
    }

    let d = state.dimension();
    let table = ConstantTable::for_mode(opts.mode, s, d, &state.delta, &opts.overrides);
    let chain = build_chain(state, &table, limits)?;
    let l = state.spec.enumerate(limits)?;
    let mut book = Bookkeeping {
        constants: Some(table.clone()),
        cs: chain.cs.clone(),
        sizes: std::iter::once(l.len()).chain(chain.sets.iter().map(|x| x.len())).collect(),
        ..Default::default()
    };
    let with_book = |mut rec: StepRecord, book: Bookkeeping| {
        rec.bookkeeping = book;
        rec
    };

    let last = chain.sets[s - 1].len();
    if int(last as i64) <= table.small {
        let cert = exhausted(
            state,
            Exhaustion::Small,
            &chain.cs,
            int(last as i64),
            &table.small,
            format!("|Λ_{s}| = {last}"),
            &table,
        );
        return done(with_book(record(state, Status::Exhausted, Some(2)), book), cert);
    }

    let target = &table.local_factor * &state.delta;
    if let Some((density, a, i)) = best_doubled(state, &l, &chain) {
        if density >= target {
            let (cert, next) = increment(state, 3, chain.specs[i - 1].clone(), &chain.sets[i - 1], a, 2, target, &table);
            return finish(state, opts, with_book(record(state, Status::Continue, Some(3)), book), cert, next);
        }
    }

    let delta_f = rational::to_f64(&state.delta);
    let f = BoundedFunction::balanced(&state.members, &l, delta_f);
    let mut top: Option<PairNorm> = None;
    for i in 1..=s {
        for j in i + 1..=s {
            let norm = u2_correlation(&f, &l, &chain.sets[i - 1], &chain.sets[j - 1], limits)?.norm;
            if top.as_ref().map_or(true, |t| norm > t.norm) {
                top = Some(PairNorm { i, j, norm: rational::real12::round(norm) });
            }
        }
    }
    let top = top.expect("s >= 2 gives at least one pair");
    book.u2 = Some(top.clone());
    if top.norm < rational::to_f64(&table.u2) {
        let measured = Rational::from_float(top.norm).unwrap_or_else(rational::zero);
        let cert = exhausted(
            state,
            Exhaustion::StalledU2,
            &chain.cs,
            measured,
            &table.u2,
            format!("largest local U² norm {} at ({}, {})", top.norm, top.i, top.j),
            &table,
        );
        return done(with_book(record(state, Status::Exhausted, None), book), cert);
    }

    let (i, j) = (top.i, top.j);
    let c_i = product(&chain.cs[..i]);
    let c_ij = product(&chain.cs[i..j]);
    let inv = check_inverse_theorem(&f, &state.spec, &c_i, &c_ij, top.norm, opts.grid, limits)?;
    book.inverse = Some(InverseSummary {
        status: Some(inv.status),
        conclusion: rational::real12::round(inv.conclusion),
        threshold: rational::real12::round(inv.threshold),
    });

    let eta = rational::to_f64(&table.eta_sq).sqrt();
    let lj = &chain.sets[j - 1];
    let c_j = product(&chain.cs[..j]);
    let fi = fourier_increment(
        &f,
        &l,
        lj,
        &c_j,
        eta,
        &table.c_prime,
        opts.grid,
        opts.mode == Mode::Faithful,
        limits,
    )?;
    book.fourier = Some(fi.clone());
    match fi {
        FourierIncrement::Translate { a, .. } => {
            let hits = state.members.count_in_translate(a, lj.elements());
            let density = rat(hits as i64, lj.len() as i64);
            let target = &state.delta + &table.inc4;
            if density >= target {
                let (cert, next) = increment(state, 4, chain.specs[j - 1].clone(), lj, a, 1, target, &table);
                return finish(state, opts, with_book(record(state, Status::Continue, Some(4)), book), cert, next);
            }
            let cert = exhausted(
                state,
                Exhaustion::StalledTranslate,
                &chain.cs,
                density - &state.delta,
                &table.inc4,
                format!("best translate a = {a} of Λ_{j}"),
                &table,
            );
            done(with_book(record(state, Status::Exhausted, None), book), cert)
        }
        FourierIncrement::Bohr { y, .. } => {
            let wide = chain.specs[j - 1].with_frequency(y);
            let half_c = &table.c_prime / int(2);
            let (_, spec, _) = regular_dilation(&wide, &half_c, limits)?;
            let lp = spec.enumerate(limits)?;
            let indicator = BoundedFunction::indicator(&state.members);
            let target = &state.delta + &table.inc5;
            if let Some((b, _)) = best_translate(&indicator, &l, &lp) {
                let hits = state.members.count_in_translate(b, lp.elements());
                let density = rat(hits as i64, lp.len() as i64);
                if density >= target {
                    let (cert, next) = increment(state, 5, spec, &lp, b, 1, target, &table);
                    return finish(state, opts, with_book(record(state, Status::Continue, Some(5)), book), cert, next);
                }
                let cert = exhausted(
                    state,
                    Exhaustion::StalledBohr,
                    &chain.cs,
                    density - &state.delta,
                    &table.inc5,
                    format!("best translate b = {b} of the new Bohr set"),
                    &table,
                );
                return done(with_book(record(state, Status::Exhausted, None), book), cert);
            }
            let cert = exhausted(
                state,
                Exhaustion::StalledBohr,
                &chain.cs,
                rational::zero(),
                &table.inc5,
                "no translate of the new Bohr set fits".into(),
                &table,
            );
            done(with_book(record(state, Status::Exhausted, None), book), cert)
        }
        FourierIncrement::HypothesisNotMet { reason } => {
            let cert = exhausted(state, Exhaustion::StalledFourier, &chain.cs, rational::zero(), &table.eta_sq, reason, &table);
            done(with_book(record(state, Status::Exhausted, None), book), cert)
        }
        FourierIncrement::Violation { best_translate, best_bohr } => {
            let cert = exhausted(
                state,
                Exhaustion::StalledFourier,
                &chain.cs,
                rational::zero(),
                &table.eta_sq,
                format!("neither conclusion: best translate mean {best_translate}, best Bohr mean {best_bohr}"),
                &table,
            );
            done(with_book(record(state, Status::Exhausted, None), book), cert)
        }
    }
}

/// Fill in the dimension, density and size bookkeeping for an increment.
fn finish(
    state: &IterationState,
    opts: &RunOptions,
    mut rec: StepRecord,
    cert: Certificate,
    next: IterationState,
) -> Result<StepOutcome> {
    let s = opts.s;
    let (d0, d1) = (state.dimension(), next.dimension());
    let case5 = rec.case == Some(5);
    let closed = ConstantTable::faithful(s, d0, &state.delta);
    let book = &mut rec.bookkeeping;
    book.dimension_ok = Some(if case5 { d1 == d0 + 1 } else { d1 == d0 });
    let gain = &next.delta - &state.delta;
    book.di1 = Some(gain >= closed.inc4);
    book.di2 = case5.then(|| gain >= closed.inc5);
    rec.certificate = Some(cert);
    Ok(StepOutcome { record: rec, next: Some(next) })
}

/// Iterate from `[-N, N]` until a configuration is found, the engine is
/// exhausted, or a limit trips. Each certificate is rechecked against `set`
/// before it is appended.
pub fn run(set: &IntSet, n: i64, opts: &RunOptions) -> Result<RunTrace> {
    if opts.s < 2 {
        return Err(Error::Invalid(format!("s must be at least 2, got {}", opts.s)));
    }
    if set.is_empty() {
        return Err(Error::EmptySet("increment input set"));
    }
    let limits = &opts.limits;
    let mut state = IterationState::initial(set, n, limits)?;
    let delta0 = state.delta.clone();
    let mut records: Vec<StepRecord> = Vec::new();
    loop {
        if state.step >= opts.max_steps {
            let mut rec = record(&state, Status::Limit, None);
            rec.bookkeeping.note = Some(format!("step limit {} reached", opts.max_steps));
            records.push(rec);
            break;
        }
        let outcome = match iterate_step(&state, opts) {
            Ok(o) => o,
            Err(e @ (Error::Capacity { .. } | Error::NotFound(_))) => {
                let mut rec = record(&state, Status::Limit, None);
                rec.bookkeeping.note = Some(e.to_string());
                records.push(rec);
                break;
            }
            Err(e) => return Err(e),
        };
        let mut rec = outcome.record;
        if let Some(cert) = &rec.certificate {
            if !recheck_certificate(cert, set, limits)? {
                return Err(Error::Invalid(format!(
                    "step {} produced a certificate that does not recheck: {cert:?}",
                    rec.step
                )));
            }
        }
        if let Some(next) = &outcome.next {
            let global = ConstantTable::faithful(opts.s, next.dimension(), &delta0);
            let book = &mut rec.bookkeeping;
            book.shrink_ok = Some(
                next.spec.eps >= &global.shrink * &state.spec.eps
                    && next.spec.m >= &global.shrink * &state.spec.m,
            );
            book.k_within_bound = Some(int(next.step as i64) <= global.k_bound);
        }
        records.push(rec);
        match outcome.next {
            Some(next) => state = next,
            None => break,
        }
    }
    Ok(RunTrace { records })
}

/// Recheck every certificate of a (possibly deserialized) trace.
pub fn recheck_trace(trace: &RunTrace, set: &IntSet, limits: &Limits) -> Result<bool> {
    for r in &trace.records {
        if let Some(c) = &r.certificate {
            if !recheck_certificate(c, set, limits)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_interval_finds_immediately() {
        let set = IntSet::new((1..=30).collect());
        let trace = run(&set, 30, &RunOptions::new(3, Mode::Faithful)).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.status(), Status::Found);
        assert!(recheck_trace(&trace, &set, &Limits::default()).unwrap());
    }

    #[test]
    fn faithful_collapse_on_progression_free_set() {
        let set = crate::patterns::behrend_set(1000);
        let trace = run(&set, 1000, &RunOptions::new(2, Mode::Faithful)).unwrap();
        assert_eq!(trace.records.len(), 1);
        let rec = &trace.records[0];
        assert_eq!(rec.status, Status::Exhausted);
        match rec.certificate.as_ref().unwrap() {
            Certificate::Exhausted { reason, measured, threshold, .. } => {
                assert_eq!(*reason, Exhaustion::Small);
                assert_eq!(*measured, int(1));
                let t = ConstantTable::faithful(2, 1, &rec.delta);
                assert_eq!(*threshold, t.small);
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = trace.to_json_lines().unwrap();
        assert_eq!(RunTrace::from_json_lines(&text).unwrap(), trace);
    }
}
