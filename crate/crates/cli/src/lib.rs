//! Command-line front end: `decide`, `check`, `simulate` and `dump`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use recset::analyzer::{
    check_closed_recurrence_set, check_recurrence_set, check_refinement, decide, dump, format_set,
    AnalyzerError, Decision, DumpStage, Position, Verdict,
};
use recset::engine::{EngineError, Limits, DEFAULT_MAX_STATES};
use recset::logic::{parse_rule_with, Logic, LogicError, Rule};
use recset::oracle::{search_recurrence_sets, simulate, TraceEnd};

pub const EXIT_LOOPS: i32 = 0;
pub const EXIT_TERMINATES: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;

/// Default `--oracle-check` search bounds: naturals below 12, tree depth 3.
const ORACLE_WORD_BOUND: usize = 12;
const ORACLE_TREE_DEPTH: usize = 3;

#[derive(Parser, Debug)]
#[command(
    name = "recset",
    version,
    about = "Decide termination of monadic loop rules via recurrence sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether each rule loops, terminates, or is out of reach.
    Decide(DecideArgs),
    /// Check that a set is a (closed) recurrence set, or validate a refinement.
    Check(CheckArgs),
    /// Run the rule from a start position, always taking the least successor.
    Simulate(SimulateArgs),
    /// Write the automaton of a compilation stage in DOT format.
    Dump(DumpArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// Override the rule file's `logic:` header.
    #[arg(long, value_enum)]
    pub logic: Option<LogicArg>,
    /// Largest automaton allowed at any intermediate step.
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    pub max_states: usize,
}

#[derive(Args, Debug)]
pub struct DecideArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
    /// Print one JSON report per rule.
    #[arg(long)]
    pub json: bool,
    /// Cross-check against exhaustive bounded search; disagreement is an internal error.
    #[arg(long)]
    pub oracle_check: bool,
    /// Decide this many files in parallel. Output keeps input order.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated positions, e.g. `3,4` or `e,1`.
    #[arg(long, allow_hyphen_values = true)]
    pub set: String,
    /// Require a closed recurrence set.
    #[arg(long)]
    pub closed: bool,
    /// Refined rule; validates the refinement instead.
    #[arg(long, requires = "set2")]
    pub rule2: Option<PathBuf>,
    /// Subset claimed closed for the refined rule.
    #[arg(long, requires = "rule2")]
    pub set2: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub start: String,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Only move to successors inside this set.
    #[arg(long)]
    pub within: Option<String>,
}

#[derive(Args, Debug)]
pub struct DumpArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = StageArg::PhiR)]
    pub stage: StageArg,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LogicArg {
    Ws1s,
    Ws2s,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StageArg {
    Atom,
    #[value(name = "phi_r")]
    PhiR,
    #[value(name = "phi_prime")]
    PhiPrime,
}

/// Machine-readable result of `decide`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub rule: String,
    pub logic: String,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub stats: ReportStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportStats {
    pub peak_states: usize,
    pub millis: u64,
}

impl Report {
    pub fn new(rule: &Rule, d: &Decision) -> Self {
        let (witness, reason) = match &d.verdict {
            Verdict::Loops { witness } => {
                (Some(witness.iter().map(|p| p.to_string()).collect()), None)
            }
            Verdict::Terminates => (None, None),
            Verdict::Unknown(r) => (None, Some(r.to_string())),
        };
        Report {
            rule: rule.name.clone(),
            logic: rule.logic.to_string(),
            verdict: d.verdict.kind().to_string(),
            witness,
            reason,
            stats: ReportStats {
                peak_states: d.stats.peak_states,
                millis: d.stats.millis as u64,
            },
            oracle: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        verdict_code(&self.verdict)
    }

    fn human(&self) -> String {
        let head = match (self.verdict.as_str(), &self.witness, &self.reason) {
            ("loops", Some(w), _) => format!("LOOPS witness {{{}}}", w.join(",")),
            ("terminates", _, _) => "TERMINATES".to_string(),
            (_, _, Some(r)) => format!("UNKNOWN ({r})"),
            (v, _, _) => v.to_uppercase(),
        };
        let mut s = format!(
            "{} [{}]: {head}\n  peak states {}, {} ms\n",
            self.rule, self.logic, self.stats.peak_states, self.stats.millis
        );
        if let Some(o) = &self.oracle {
            s.push_str(&format!("  oracle: {o}\n"));
        }
        s
    }
}

/// Exit code of a verdict kind as printed in reports.
pub fn verdict_code(kind: &str) -> i32 {
    match kind {
        "loops" => EXIT_LOOPS,
        "terminates" => EXIT_TERMINATES,
        _ => EXIT_UNKNOWN,
    }
}

/// A failure that ends the command with a specific exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<AnalyzerError> for Failure {
    fn from(e: AnalyzerError) -> Self {
        let code = match &e {
            AnalyzerError::Engine(EngineError::ResourceExceeded { .. }) => EXIT_UNKNOWN,
            AnalyzerError::PositionLogic { .. } | AnalyzerError::LogicMismatch(..) => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn limits(c: &Common) -> Limits {
    Limits::with_max_states(c.max_states)
}

fn load(path: &Path, c: &Common) -> Result<Rule, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_NO_INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    let logic = c.logic.map(|l| match l {
        LogicArg::Ws1s => Logic::Ws1s,
        LogicArg::Ws2s => Logic::Ws2s,
    });
    parse_rule_with(&text, logic)
        .map_err(|e: LogicError| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_set(s: &str, logic: Logic) -> Result<BTreeSet<Position>, Failure> {
    Position::parse_set(s, logic).map_err(Failure::usage)
}

/// Parses `args` (including the program name) and runs the command, writing to
/// `out` and `err`. Returns the process exit code.
pub fn run(
    args: impl IntoIterator<Item = String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Decide(a) => cmd_decide(&a, out, err),
        Command::Check(a) => cmd_check(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Dump(a) => cmd_dump(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn decide_one(path: &Path, a: &DecideArgs) -> Result<Report, Failure> {
    let rule = load(path, &a.common)?;
    let lim = limits(&a.common);
    let decision = decide(&rule, lim)?;
    let mut report = Report::new(&rule, &decision);
    if a.oracle_check {
        report.oracle = Some(oracle_check(&rule, &decision, lim)?);
    }
    Ok(report)
}

fn oracle_check(rule: &Rule, d: &Decision, lim: Limits) -> Result<String, Failure> {
    let bound = match rule.logic {
        Logic::Ws1s => ORACLE_WORD_BOUND,
        Logic::Ws2s => ORACLE_TREE_DEPTH,
    };
    let in_range = |p: &Position| match p {
        Position::Nat(n) => (*n as usize) < bound,
        Position::Node(n) => n.len() <= bound,
    };
    let found = search_recurrence_sets(rule, bound).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: format!("oracle: {e}"),
    })?;
    let disagreement = match (&d.verdict, &found) {
        (Verdict::Loops { witness }, None) if witness.iter().all(in_range) => Some(format!(
            "engine witness {{{}}} lies within bound {bound} but the search found nothing",
            format_set(witness)
        )),
        (Verdict::Loops { .. }, _) => None,
        (_, Some(x)) if check_recurrence_set(rule, x, lim)? => Some(format!(
            "search found recurrence set {{{}}} the engine missed",
            format_set(x)
        )),
        _ => None,
    };
    match disagreement {
        Some(m) => Err(Failure {
            code: EXIT_INTERNAL,
            message: format!("{}: oracle disagreement: {m}", rule.name),
        }),
        None => Ok(match found {
            Some(x) => format!("agrees (bound {bound}, found {{{}}})", format_set(&x)),
            None => format!("agrees (bound {bound}, none found)"),
        }),
    }
}

fn cmd_decide(a: &DecideArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| Failure {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        })?;
    let results: Vec<Result<Report, Failure>> =
        pool.install(|| a.files.par_iter().map(|p| decide_one(p, a)).collect());
    let mut code = 0;
    for r in results {
        let c = match r {
            Ok(report) => {
                if a.json {
                    let _ = writeln!(
                        out,
                        "{}",
                        serde_json::to_string(&report).expect("report serializes")
                    );
                } else {
                    let _ = write!(out, "{}", report.human());
                }
                report.exit_code()
            }
            Err(f) => {
                let _ = writeln!(err, "error: {}", f.message);
                f.code
            }
        };
        code = code.max(c);
    }
    Ok(code)
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let rule = load(&a.file, &a.common)?;
    let lim = limits(&a.common);
    let set = parse_set(&a.set, rule.logic)?;
    let ok = match (&a.rule2, &a.set2) {
        (Some(path2), Some(s2)) => {
            let refined = load(path2, &a.common)?;
            let set2 = parse_set(s2, refined.logic)?;
            let ok = check_refinement(&rule, &refined, &set, &set2, lim)?;
            let _ = writeln!(
                out,
                "{} {{{}}} refined by {} {{{}}}: {}",
                rule.name,
                format_set(&set),
                refined.name,
                format_set(&set2),
                if ok { "valid" } else { "invalid" }
            );
            ok
        }
        _ => {
            let (what, ok) = if a.closed {
                (
                    "closed recurrence set",
                    check_closed_recurrence_set(&rule, &set, lim)?,
                )
            } else {
                ("recurrence set", check_recurrence_set(&rule, &set, lim)?)
            };
            let verb = if ok { "is" } else { "is not" };
            let _ = writeln!(
                out,
                "{}: {{{}}} {verb} a {what}",
                rule.name,
                format_set(&set)
            );
            ok
        }
    };
    Ok(if ok { 0 } else { 1 })
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let rule = load(&a.file, &a.common)?;
    let start = Position::parse(&a.start, rule.logic)
        .ok_or_else(|| Failure::usage(format!("bad {} position `{}`", rule.logic, a.start)))?;
    let within = a
        .within
        .as_deref()
        .map(|s| parse_set(s, rule.logic))
        .transpose()?;
    let trace = simulate(&rule, start, a.steps, within.as_ref(), limits(&a.common))?;
    let path: Vec<String> = trace.positions.iter().map(|p| p.to_string()).collect();
    let end = match trace.end {
        TraceEnd::Stuck => "stuck",
        TraceEnd::Truncated => "truncated",
    };
    let _ = writeln!(out, "{}", path.join(" -> "));
    let _ = writeln!(out, "{} steps, {end}", trace.steps());
    Ok(0)
}

fn cmd_dump(a: &DumpArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let rule = load(&a.file, &a.common)?;
    let stage = match a.stage {
        StageArg::Atom => DumpStage::Atom,
        StageArg::PhiR => DumpStage::PhiR,
        StageArg::PhiPrime => DumpStage::PhiPrime,
    };
    let dot = dump(&rule, stage, limits(&a.common))?;
    match &a.dot {
        Some(path) => std::fs::write(path, dot).map_err(|e| Failure {
            code: EXIT_NO_INPUT,
            message: format!("{}: {e}", path.display()),
        })?,
        None => {
            let _ = out.write_all(dot.as_bytes());
        }
    }
    Ok(0)
}
