//! Command-line front end for the `linpat` toolkit.

pub mod io;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use linpat::bohr::{find_regular_alpha, regularity_certificate, BohrSpec};
use linpat::function::BoundedFunction;
use linpat::gowers::{check_inverse_theorem, u2_correlation, u2_direct, InverseStatus};
use linpat::increment::{self, Mode, RunOptions};
use linpat::patterns::{self, DichotomyOptions, Search};
use linpat::reduce::Limits;
use linpat::sumfree::{self, SubsetSearch};
use linpat::{Error, IntSet, Rational};

use io::{parse_rational, Format};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "LINPAT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "linpat", version, about = "Linear patterns of complexity one: Bohr sets, U² norms, configurations, density increments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Report destination (standard output when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bohr set enumeration and regularity.
    #[command(subcommand)]
    Bohr(BohrCmd),
    /// Local U² norms and the inverse theorem check.
    #[command(subcommand)]
    U2(U2Cmd),
    /// Configuration search, 3-AP counting and the local dichotomy.
    #[command(subcommand)]
    Patterns(PatternsCmd),
    /// Test set generators.
    #[command(subcommand)]
    Gen(GenCmd),
    /// The density-increment driver.
    #[command(subcommand)]
    Increment(IncrementCmd),
    /// Sum-free checks and Freiman embeddings.
    #[command(subcommand)]
    Sumfree(SumfreeCmd),
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Bohr spec JSON: {"theta": [[p,q],…], "eps": [p,q], "M": [p,q]}.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BohrCmd {
    /// List the elements of a Bohr set.
    Enum(SpecArg),
    /// Exact regularity certificate.
    Regular(SpecArg),
    /// Find α ∈ [1/2, 1] with αΛ regular.
    FindAlpha(SpecArg),
}

#[derive(Debug, Args)]
pub struct FunctionArgs {
    /// Function file, `n re [im]` per line.
    #[arg(long, conflicts_with = "set")]
    pub function: Option<PathBuf>,
    /// Use the indicator of this set.
    #[arg(long)]
    pub set: Option<PathBuf>,
    #[arg(long)]
    pub spec: PathBuf,
    /// Λ₁ = c₁Λ.
    #[arg(long, value_parser = parse_rational)]
    pub c1: Rational,
    /// Λ₂ = c₂Λ₁.
    #[arg(long, value_parser = parse_rational)]
    pub c2: Rational,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum U2Choice {
    Direct,
    Correlation,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum U2Cmd {
    /// Local U² norm of f on (Λ, Λ₁, Λ₂).
    Compute {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long, value_enum, default_value = "correlation")]
        method: U2Choice,
    },
    /// Check the local inverse theorem on f.
    InverseCheck {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CountMethod {
    Fft,
    Direct,
}

#[derive(Debug, Subcommand)]
pub enum PatternsCmd {
    /// Search for a nontrivial s-configuration.
    Find {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        s: usize,
        /// Search nodes per root.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Count nontrivial 3-term progressions.
    Count {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_enum, default_value = "fft")]
        method: CountMethod,
    },
    /// Run the local dichotomy on one or more sets.
    Dichotomy {
        /// Repeat for a sweep; one report row per set.
        #[arg(long, required = true)]
        set: Vec<PathBuf>,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        s: usize,
        /// Comma-separated c₁,…,c_s.
        #[arg(long, value_delimiter = ',', value_parser = parse_rational, required = true)]
        cs: Vec<Rational>,
        /// Skip the regularity requirement on the chain.
        #[arg(long)]
        allow_irregular: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCmd {
    /// Behrend's sphere-shell set in [1, N].
    Behrend {
        #[arg(long)]
        n: u64,
        /// Also write the set as a plain set file.
        #[arg(long)]
        set_out: Option<PathBuf>,
    },
    /// Each of 1..N kept independently with probability δ.
    Random {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        set_out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum IncrementCmd {
    /// Iterate the density increment from Λ = [-N, N].
    Run {
        #[arg(long)]
        set: PathBuf,
        /// Defaults to the largest |a| in the set.
        #[arg(long)]
        n: Option<i64>,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum, default_value = "practical")]
        mode: ModeArg,
        /// JSON object of constant overrides, {"name": [p, q]}.
        #[arg(long)]
        constants: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 64)]
        max_steps: usize,
        /// Search nodes per root in the configuration search.
        #[arg(long)]
        budget: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Faithful,
    Practical,
}

#[derive(Debug, Subcommand)]
pub enum SumfreeCmd {
    /// Is Z sum-free with respect to W?
    Check {
        #[arg(long)]
        set: PathBuf,
        /// W; defaults to Z itself.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Embed a set of small doubling into a cyclic group.
    Embed {
        #[arg(long)]
        set: PathBuf,
        /// Doubling bound K; defaults to the measured |A-A|/|A|.
        #[arg(long, value_parser = parse_rational)]
        k: Option<Rational>,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Search an h-configuration through a cyclic embedding.
    FindConfig {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        h: usize,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Search B ⊆ A with |B| = h sum-free with respect to A.
    Subset {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        h: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Accepted modulus is at most c_embed·K·|A|.
    #[arg(long, value_parser = parse_rational, default_value = "4")]
    pub c_embed: Rational,
    #[arg(long, default_value_t = 32)]
    pub retries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A report and the exit code it carries.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub code: i32,
    /// Preformatted output used instead of `report` in JSON mode.
    pub json_lines: Option<String>,
}

impl Outcome {
    fn new(report: Value, code: i32) -> Self {
        Outcome {
            report,
            code,
            json_lines: None,
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn read_set(p: &Path) -> Result<IntSet> {
    io::read_set_file(p).with_context(|| format!("reading set file {}", p.display()))
}

fn read_spec(p: &Path) -> Result<BohrSpec> {
    io::read_spec_file(p).with_context(|| format!("reading spec file {}", p.display()))
}

fn read_function(f: &FunctionArgs) -> Result<BoundedFunction> {
    match (&f.function, &f.set) {
        (Some(p), _) => io::read_function_file(p)
            .with_context(|| format!("reading function file {}", p.display())),
        (None, Some(p)) => Ok(BoundedFunction::indicator(&read_set(p)?)),
        (None, None) => bail!(Error::Invalid("one of --function or --set is required".into())),
    }
}

fn search_code(s: &Search) -> i32 {
    match s {
        Search::Found { .. } => 0,
        Search::None { .. } => 1,
        Search::Inconclusive { .. } => 3,
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    let limits = Limits::default();
    match cmd {
        Command::Bohr(b) => match b {
            BohrCmd::Enum(a) => {
                let spec = read_spec(&a.spec)?;
                let set = spec.enumerate(&limits)?;
                Ok(Outcome::new(
                    json!({"spec": to_value(&spec)?, "size": set.len(), "elements": set.elements()}),
                    0,
                ))
            }
            BohrCmd::Regular(a) => {
                let spec = read_spec(&a.spec)?;
                let cert = regularity_certificate(&spec, &limits)?;
                let code = if cert.verdict { 0 } else { 1 };
                Ok(Outcome::new(
                    json!({"spec": to_value(&spec)?, "certificate": to_value(&cert)?}),
                    code,
                ))
            }
            BohrCmd::FindAlpha(a) => {
                let spec = read_spec(&a.spec)?;
                match find_regular_alpha(&spec, &limits) {
                    Ok((alpha, cert)) => Ok(Outcome::new(
                        json!({
                            "spec": to_value(&spec)?,
                            "alpha": linpat::rational::to_json(&alpha),
                            "certificate": to_value(&cert)?,
                        }),
                        0,
                    )),
                    Err(Error::NotFound(msg)) => Ok(Outcome::new(
                        json!({"spec": to_value(&spec)?, "alpha": null, "reason": msg}),
                        1,
                    )),
                    Err(e) => Err(e.into()),
                }
            }
        },
        Command::U2(u) => match u {
            U2Cmd::Compute { f, method } => {
                let func = read_function(f)?;
                let spec = read_spec(&f.spec)?;
                let s1 = spec.dilate(&f.c1)?;
                let s2 = s1.dilate(&f.c2)?;
                let (l, l1, l2) = (
                    spec.enumerate(&limits)?,
                    s1.enumerate(&limits)?,
                    s2.enumerate(&limits)?,
                );
                let mut reports = Vec::new();
                if matches!(method, U2Choice::Direct | U2Choice::Both) {
                    reports.push(to_value(&u2_direct(&func, &l, &l1, &l2, &limits)?)?);
                }
                if matches!(method, U2Choice::Correlation | U2Choice::Both) {
                    reports.push(to_value(&u2_correlation(&func, &l, &l1, &l2, &limits)?)?);
                }
                let report = if reports.len() == 1 {
                    reports.pop().expect("one report")
                } else {
                    Value::Array(reports)
                };
                Ok(Outcome::new(report, 0))
            }
            U2Cmd::InverseCheck { f, eta, grid } => {
                let func = read_function(f)?;
                let spec = read_spec(&f.spec)?;
                let check = check_inverse_theorem(&func, &spec, &f.c1, &f.c2, *eta, *grid, &limits)?;
                let code = match check.status {
                    InverseStatus::Pass => 0,
                    InverseStatus::Fail | InverseStatus::HypothesisNotMet => 1,
                };
                Ok(Outcome::new(to_value(&check)?, code))
            }
        },
        Command::Patterns(p) => patterns_cmd(p, &limits),
        Command::Gen(g) => {
            let (report, set, set_out) = match g {
                GenCmd::Behrend { n, set_out } => {
                    let choice = patterns::behrend_choice(*n);
                    let set = patterns::behrend_set(*n);
                    let report = json!({
                        "generator": "behrend",
                        "n": n,
                        "choice": to_value(&choice)?,
                        "size": set.len(),
                        "elements": set.as_slice(),
                    });
                    (report, set, set_out)
                }
                GenCmd::Random { n, delta, seed, set_out } => {
                    let set = patterns::random_set(*n, *delta, *seed)?;
                    let report = json!({
                        "generator": "random",
                        "n": n,
                        "delta": delta,
                        "seed": seed,
                        "size": set.len(),
                        "elements": set.as_slice(),
                    });
                    (report, set, set_out)
                }
            };
            if let Some(p) = set_out {
                std::fs::write(p, io::format_set(&set))
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(Outcome::new(report, 0))
        }
        Command::Increment(IncrementCmd::Run {
            set,
            n,
            s,
            mode,
            constants,
            grid,
            max_steps,
            budget,
        }) => {
            let a = read_set(set)?;
            let n = match n {
                Some(n) => *n,
                None => a.iter().map(|x| x.abs()).max().unwrap_or(1).max(1),
            };
            let mut opts = RunOptions::new(
                *s,
                match mode {
                    ModeArg::Faithful => Mode::Faithful,
                    ModeArg::Practical => Mode::Practical,
                },
            );
            opts.grid = *grid;
            opts.max_steps = *max_steps;
            if let Some(b) = budget {
                opts.limits.search = *b;
            }
            if let Some(p) = constants {
                opts.overrides = io::read_constants_file(p)
                    .with_context(|| format!("reading constants file {}", p.display()))?;
            }
            if opts.mode == Mode::Faithful && !opts.overrides.is_empty() {
                bail!(Error::Invalid("constant overrides apply to practical mode only".into()));
            }
            let trace = increment::run(&a, n, &opts)?;
            let mut lines = String::new();
            let mut rows = Vec::new();
            for r in &trace.records {
                lines.push_str(&io::canonical_json(r)?);
                lines.push('\n');
                rows.push(json!({
                    "step": r.step,
                    "status": to_value(&r.status)?,
                    "case": r.case,
                    "d": r.d,
                    "delta": linpat::rational::to_json(&r.delta),
                }));
            }
            Ok(Outcome {
                report: Value::Array(rows),
                code: trace.exit_code(),
                json_lines: Some(lines),
            })
        }
        Command::Sumfree(c) => sumfree_cmd(c),
    }
}

fn patterns_cmd(p: &PatternsCmd, limits: &Limits) -> Result<Outcome> {
    match p {
        PatternsCmd::Find { set, s, budget } => {
            let a = read_set(set)?;
            let r = patterns::find_configuration(&a, *s, *budget)?;
            let mut report = to_value(&r)?;
            if let Search::Found { configuration } = &r {
                report["elements"] = to_value(&configuration.elements())?;
            }
            Ok(Outcome::new(report, search_code(&r)))
        }
        PatternsCmd::Count { set, method } => {
            let a = read_set(set)?;
            let count = match method {
                CountMethod::Fft => patterns::count_3aps_fft(&a),
                CountMethod::Direct => patterns::count_3aps_direct(&a),
            };
            let name = match method {
                CountMethod::Fft => "fft",
                CountMethod::Direct => "direct",
            };
            Ok(Outcome::new(
                json!({"size": a.len(), "three_aps": count, "method": name}),
                0,
            ))
        }
        PatternsCmd::Dichotomy {
            set,
            spec,
            s,
            cs,
            allow_irregular,
        } => {
            let lambda = read_spec(spec)?;
            let opts = DichotomyOptions {
                thresholds: None,
                limits: limits.clone(),
                require_regular: !allow_irregular,
            };
            let mut rows = Vec::new();
            let mut code = 0;
            for path in set {
                let a = read_set(path)?;
                let mut row = match patterns::dichotomy(&a, &lambda, *s, cs, &opts) {
                    Ok(report) => {
                        let rechecked = patterns::recheck_dichotomy(&report, &a, &lambda, limits)?;
                        if !rechecked {
                            bail!(Error::Invalid(format!(
                                "dichotomy certificate for {} failed its recheck",
                                path.display()
                            )));
                        }
                        if matches!(report.outcome, patterns::DichotomyOutcome::TheoremViolation { .. }) {
                            code = 1;
                        }
                        let mut v = to_value(&report)?;
                        v["rechecked"] = json!(rechecked);
                        v
                    }
                    Err(Error::ConfigurationExists(c)) => {
                        json!({"outcome": {"case": "found", "a": c.a, "ns": c.ns}, "s": s})
                    }
                    Err(e) => return Err(e.into()),
                };
                row["set"] = json!(path.display().to_string());
                rows.push(row);
            }
            let report = if rows.len() == 1 {
                rows.pop().expect("one row")
            } else {
                Value::Array(rows)
            };
            Ok(Outcome::new(report, code))
        }
    }
}

fn sumfree_cmd(c: &SumfreeCmd) -> Result<Outcome> {
    match c {
        SumfreeCmd::Check { set, against } => {
            let z = read_set(set)?;
            let w = match against {
                Some(p) => read_set(p)?,
                None => z.clone(),
            };
            let ok = sumfree::is_sumfree_with_respect_to(&z, &w);
            Ok(Outcome::new(json!({"sumfree": ok, "size": z.len()}), if ok { 0 } else { 1 }))
        }
        SumfreeCmd::Embed { set, k, embed } => {
            let a = read_set(set)?;
            if a.is_empty() {
                bail!(Error::EmptySet("set to embed"));
            }
            let k = match k {
                Some(k) => k.clone(),
                None => linpat::rational::rat(a.difference_set().len() as i64, a.len() as i64),
            };
            match sumfree::ruzsa_embed(&a, &k, &embed.c_embed, embed.retries, embed.seed) {
                Ok(e) => Ok(Outcome::new(to_value(&e)?, 0)),
                Err(Error::NotFound(msg)) => Ok(Outcome::new(json!({"embedding": null, "reason": msg}), 1)),
                Err(e) => Err(e.into()),
            }
        }
        SumfreeCmd::FindConfig { set, h, embed, budget } => {
            let y = read_set(set)?;
            let r = sumfree::find_configuration_via_embedding(
                &y,
                *h,
                &embed.c_embed,
                embed.retries,
                embed.seed,
                *budget,
            )?;
            let code = search_code(&r.search);
            Ok(Outcome::new(to_value(&r)?, code))
        }
        SumfreeCmd::Subset { set, h, budget } => {
            let a = read_set(set)?;
            let r = sumfree::find_sumfree_subset(&a, *h, *budget)?;
            let code = match r {
                SubsetSearch::Found { .. } => 0,
                SubsetSearch::None => 1,
                SubsetSearch::Inconclusive { .. } => 3,
            };
            Ok(Outcome::new(to_value(&r)?, code))
        }
    }
}

/// Exit code for a failed run: 2 for usage and input problems, 3 for
/// exhausted work limits, 4 for I/O.
pub fn error_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Capacity { .. } => 3,
                Error::Io(_) => 4,
                Error::NotFound(_) => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
    }
    2
}

/// Render and write the outcome, returning the exit code.
pub fn deliver(cli: &Cli, outcome: &Outcome) -> Result<i32> {
    let text = match (&outcome.json_lines, cli.format) {
        (Some(lines), Format::Json) => lines.clone(),
        _ => io::render(&outcome.report, cli.format)?,
    };
    io::emit(&text, cli.out.as_deref())?;
    Ok(outcome.code)
}

/// Parse, run and report; the return value is the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = execute(&cli.command).and_then(|o| deliver(&cli, &o));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            error_code(&e)
        }
    }
}
