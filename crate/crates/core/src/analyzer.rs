//! Recurrence-set formulas, the decision pipeline and exact set checkers.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::engine::{
    compile, Automaton, BoolOp, Budget, EngineError, Limits, TrackAssignment, TreeAutomaton,
    Valuation, WordAutomaton,
};
use crate::logic::{Formula, Logic, Node, Rule, Term, Var};

/// A position of either structure: a natural for WS1S, a tree node for WS2S.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    Nat(u32),
    Node(Node),
}

impl Position {
    pub fn logic(&self) -> Logic {
        match self {
            Position::Nat(_) => Logic::Ws1s,
            Position::Node(_) => Logic::Ws2s,
        }
    }

    /// Decimal for WS1S, bit string (`e` for the root) for WS2S.
    pub fn parse(s: &str, logic: Logic) -> Option<Position> {
        let s = s.trim();
        match logic {
            Logic::Ws1s => s.parse().ok().map(Position::Nat),
            Logic::Ws2s => Node::parse_literal(s).map(Position::Node),
        }
    }

    /// Comma-separated list of positions; the empty string is the empty set.
    pub fn parse_set(s: &str, logic: Logic) -> Result<BTreeSet<Position>, String> {
        if s.trim().is_empty() {
            return Ok(BTreeSet::new());
        }
        s.split(',')
            .map(|p| {
                Position::parse(p, logic)
                    .ok_or_else(|| format!("bad {logic} position `{}`", p.trim()))
            })
            .collect()
    }

    fn term(&self) -> Term {
        match self {
            Position::Nat(n) => Term::numeral(*n),
            Position::Node(n) => Term::node(*n),
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Nat(n) => write!(f, "{n}"),
            Position::Node(n) => f.write_str(&n.to_literal()),
        }
    }
}

pub fn format_set(set: &BTreeSet<Position>) -> String {
    set.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    InfiniteStartSetNoFiniteRecurrence,
    ResourceExceeded,
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnknownReason::InfiniteStartSetNoFiniteRecurrence => {
                "InfiniteStartSetNoFiniteRecurrence"
            }
            UnknownReason::ResourceExceeded => "ResourceExceeded",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// A finite recurrence set exists; `witness` is one, already verified.
    Loops {
        witness: BTreeSet<Position>,
    },
    /// No finite recurrence set and only finitely many start points.
    Terminates,
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Loops { .. } => "loops",
            Verdict::Terminates => "terminates",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub peak_states: usize,
    pub millis: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    /// Outcome of the start-set finiteness check, when it was run.
    pub finite_start: Option<bool>,
    pub stats: Stats,
}

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("position {position} does not belong to {logic}")]
    PositionLogic { position: Position, logic: Logic },
    #[error("rules use different logics ({0} and {1})")]
    LogicMismatch(Logic, Logic),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Name of the recurrence-set variable. The parser rejects `_` identifiers, so it
/// cannot clash with anything bound inside a rule body.
pub const SET_VAR: &str = "_R";

fn set_var() -> Var {
    Var::second(SET_VAR)
}

fn x() -> Var {
    Var::first(Rule::SOURCE)
}

fn y() -> Var {
    Var::first(Rule::TARGET)
}

fn member(v: Var) -> Formula {
    Formula::In(Term::var(v), set_var())
}

/// `ex1 x: x in X`
fn nonempty() -> Formula {
    Formula::exists(x(), member(x()))
}

/// `all1 x: ex1 y: (x in X => psi(x,y) & y in X)` with `X` free.
pub fn recurrence_body(r: &Rule) -> Formula {
    Formula::and(
        nonempty(),
        Formula::forall(
            x(),
            Formula::exists(
                y(),
                Formula::implies(member(x()), Formula::and(r.body.clone(), member(y()))),
            ),
        ),
    )
}

/// The closed variant with `X` free: every element has a successor and every
/// successor of an element stays inside.
pub fn closed_recurrence_body(r: &Rule) -> Formula {
    Formula::conj([
        nonempty(),
        Formula::forall(
            x(),
            Formula::exists(y(), Formula::implies(member(x()), r.body.clone())),
        ),
        Formula::forall(
            x(),
            Formula::forall(
                y(),
                Formula::implies(Formula::and(member(x()), r.body.clone()), member(y())),
            ),
        ),
    ])
}

/// The sentence stating that `r` has a recurrence set.
pub fn build_phi_r(r: &Rule) -> Formula {
    Formula::exists(set_var(), recurrence_body(r))
}

/// The sentence stating that `r` has a closed recurrence set.
pub fn build_phi_prime_r(r: &Rule) -> Formula {
    Formula::exists(set_var(), closed_recurrence_body(r))
}

/// The sentence stating that only finitely many positions have a successor.
pub fn finite_start_formula(r: &Rule) -> Formula {
    let has_successor = Formula::exists(y(), r.body.clone());
    match r.logic {
        Logic::Ws1s => {
            let m = Var::first("_m");
            Formula::exists(
                m.clone(),
                Formula::forall(
                    x(),
                    Formula::implies(
                        Formula::Lt(Term::var(m), Term::var(x())),
                        Formula::not(has_successor),
                    ),
                ),
            )
        }
        Logic::Ws2s => {
            let big = Var::second("_M");
            Formula::exists(
                big.clone(),
                Formula::forall(
                    x(),
                    Formula::implies(has_successor, Formula::In(Term::var(x()), big)),
                ),
            )
        }
    }
}

/// Engine operations the analyzer needs, implemented by both automaton kinds.
pub(crate) trait Structure: Automaton + Clone {
    type Pos: Ord + Clone;
    const LOGIC: Logic;

    fn accepts_valuation(&self, v: &Valuation<Self::Pos>) -> bool;
    fn smallest_valuation(&self) -> Result<Option<Valuation<Self::Pos>>, EngineError>;
    fn lift(p: &Self::Pos) -> Position;
    fn lower(p: &Position) -> Option<Self::Pos>;
    fn dot(&self, name: &str) -> String;
}

impl Structure for WordAutomaton {
    type Pos = u32;
    const LOGIC: Logic = Logic::Ws1s;

    fn accepts_valuation(&self, v: &Valuation<u32>) -> bool {
        self.accepts(v)
    }

    fn smallest_valuation(&self) -> Result<Option<Valuation<u32>>, EngineError> {
        self.shortest_witness().map(|w| self.decode(&w)).transpose()
    }

    fn lift(p: &u32) -> Position {
        Position::Nat(*p)
    }

    fn lower(p: &Position) -> Option<u32> {
        match p {
            Position::Nat(n) => Some(*n),
            Position::Node(_) => None,
        }
    }

    fn dot(&self, name: &str) -> String {
        self.to_dot(name)
    }
}

impl Structure for TreeAutomaton {
    type Pos = Node;
    const LOGIC: Logic = Logic::Ws2s;

    fn accepts_valuation(&self, v: &Valuation<Node>) -> bool {
        self.accepts(v)
    }

    fn smallest_valuation(&self) -> Result<Option<Valuation<Node>>, EngineError> {
        self.smallest_witness().map(|t| self.decode(&t)).transpose()
    }

    fn lift(p: &Node) -> Position {
        Position::Node(*p)
    }

    fn lower(p: &Position) -> Option<Node> {
        match p {
            Position::Node(n) => Some(*n),
            Position::Nat(_) => None,
        }
    }

    fn dot(&self, name: &str) -> String {
        self.to_dot(name)
    }
}

fn lower_set<S: Structure>(set: &BTreeSet<Position>) -> Result<BTreeSet<S::Pos>, AnalyzerError> {
    set.iter()
        .map(|p| {
            S::lower(p).ok_or(AnalyzerError::PositionLogic {
                position: *p,
                logic: S::LOGIC,
            })
        })
        .collect()
}

/// The successor relation of a rule, `S_x = { y : psi(x,y) }`, answered by exact
/// acceptance queries on the compiled body.
#[derive(Clone, Debug)]
pub struct SuccessorSetView {
    logic: Logic,
    inner: ViewInner,
}

#[derive(Clone, Debug)]
enum ViewInner {
    Word(WordAutomaton),
    Tree(TreeAutomaton),
}

impl SuccessorSetView {
    pub fn new(r: &Rule, limits: Limits) -> Result<Self, AnalyzerError> {
        let budget = Budget::new(limits);
        let tracks = TrackAssignment::new([x(), y()]);
        let inner = match r.logic {
            Logic::Ws1s => ViewInner::Word(compile(&r.body, &tracks, &budget)?),
            Logic::Ws2s => ViewInner::Tree(compile(&r.body, &tracks, &budget)?),
        };
        Ok(SuccessorSetView {
            logic: r.logic,
            inner,
        })
    }

    pub fn logic(&self) -> Logic {
        self.logic
    }

    /// Number of states of the compiled body.
    pub fn state_count(&self) -> usize {
        match &self.inner {
            ViewInner::Word(a) => a.state_count(),
            ViewInner::Tree(a) => a.state_count(),
        }
    }

    /// Whether `psi(from, to)` holds. Positions of the other logic are never related.
    pub fn contains(&self, from: &Position, to: &Position) -> bool {
        fn go<S: Structure>(a: &S, from: &Position, to: &Position) -> bool {
            match (S::lower(from), S::lower(to)) {
                (Some(f), Some(t)) => a.accepts_valuation(
                    &Valuation::new()
                        .with_first(Rule::SOURCE, f)
                        .with_first(Rule::TARGET, t),
                ),
                _ => false,
            }
        }
        match &self.inner {
            ViewInner::Word(a) => go(a, from, to),
            ViewInner::Tree(a) => go(a, from, to),
        }
    }

    /// The least successor of `from` (numeric order, or length-lex on tree
    /// positions), or `None` when `from` is stuck.
    pub fn min_successor(&self, from: &Position) -> Result<Option<Position>, AnalyzerError> {
        fn go<S: Structure>(a: &S, from: &Position) -> Result<Option<Position>, AnalyzerError> {
            let budget = Budget::new(Limits::default());
            let pinned: S = compile(
                &Formula::Eq(Term::var(x()), from.term()),
                &TrackAssignment::new([x()]),
                &budget,
            )?;
            let x_id = a
                .tracks()
                .iter()
                .find(|t| t.var == x())
                .map(|t| t.id)
                .expect("x track");
            let successors = a
                .product(&pinned, BoolOp::And, &budget)?
                .project(x_id, &budget)?;
            Ok(successors
                .smallest_valuation()?
                .map(|v| S::lift(&v.first[Rule::TARGET])))
        }
        if from.logic() != self.logic {
            return Err(AnalyzerError::PositionLogic {
                position: *from,
                logic: self.logic,
            });
        }
        match &self.inner {
            ViewInner::Word(a) => go(a, from),
            ViewInner::Tree(a) => go(a, from),
        }
    }

    /// The least element of `within` that is a successor of `from`.
    pub fn min_successor_within(
        &self,
        from: &Position,
        within: &BTreeSet<Position>,
    ) -> Option<Position> {
        within.iter().find(|to| self.contains(from, to)).copied()
    }
}

/// Nonempty, and every element has a successor inside the set.
pub fn check_recurrence_set(
    r: &Rule,
    set: &BTreeSet<Position>,
    limits: Limits,
) -> Result<bool, AnalyzerError> {
    if set.is_empty() {
        return Ok(false);
    }
    if let Some(p) = set.iter().find(|p| p.logic() != r.logic) {
        return Err(AnalyzerError::PositionLogic {
            position: *p,
            logic: r.logic,
        });
    }
    let view = SuccessorSetView::new(r, limits)?;
    Ok(set
        .iter()
        .all(|from| view.min_successor_within(from, set).is_some()))
}

/// Additionally requires every successor of every element to lie in the set. The
/// successor quantifier ranges over all positions.
pub fn check_closed_recurrence_set(
    r: &Rule,
    set: &BTreeSet<Position>,
    limits: Limits,
) -> Result<bool, AnalyzerError> {
    fn go<S: Structure>(
        r: &Rule,
        set: &BTreeSet<Position>,
        budget: &Budget,
    ) -> Result<bool, AnalyzerError> {
        let set = lower_set::<S>(set)?;
        let a: S = compile(
            &closed_recurrence_body(r),
            &TrackAssignment::new([set_var()]),
            budget,
        )?;
        Ok(a.accepts_valuation(&Valuation::new().with_set(SET_VAR, set)))
    }
    let budget = Budget::new(limits);
    match r.logic {
        Logic::Ws1s => go::<WordAutomaton>(r, set, &budget),
        Logic::Ws2s => go::<TreeAutomaton>(r, set, &budget),
    }
}

/// Validates a refinement: `psi'` implies `psi`, `X' ⊆ X`, and `X'` is a closed
/// recurrence set for `r'`.
pub fn check_refinement(
    r: &Rule,
    refined: &Rule,
    set: &BTreeSet<Position>,
    refined_set: &BTreeSet<Position>,
    limits: Limits,
) -> Result<bool, AnalyzerError> {
    if r.logic != refined.logic {
        return Err(AnalyzerError::LogicMismatch(r.logic, refined.logic));
    }
    if !refined_set.is_subset(set) {
        return Ok(false);
    }
    let budget = Budget::new(limits);
    let counterexample = Formula::and(refined.body.clone(), Formula::not(r.body.clone()));
    let tracks = TrackAssignment::new([x(), y()]);
    let implied = match r.logic {
        Logic::Ws1s => compile::<WordAutomaton>(&counterexample, &tracks, &budget)?.is_empty(),
        Logic::Ws2s => compile::<TreeAutomaton>(&counterexample, &tracks, &budget)?.is_empty(),
    };
    Ok(implied && check_closed_recurrence_set(refined, refined_set, limits)?)
}

/// Whether the set of positions that can start a computation is finite.
pub fn finite_start_check(r: &Rule, limits: Limits) -> Result<bool, AnalyzerError> {
    let budget = Budget::new(limits);
    sentence_holds(&finite_start_formula(r), r.logic, &budget)
}

fn sentence_holds(f: &Formula, logic: Logic, budget: &Budget) -> Result<bool, AnalyzerError> {
    let none = TrackAssignment::new([]);
    Ok(match logic {
        Logic::Ws1s => !compile::<WordAutomaton>(f, &none, budget)?.is_empty(),
        Logic::Ws2s => !compile::<TreeAutomaton>(f, &none, budget)?.is_empty(),
    })
}

/// Runs the decision pipeline: a finite recurrence set proves looping; failing
/// that, a finite start set proves termination; otherwise the answer is unknown.
/// Exceeding the state limit yields `Unknown(ResourceExceeded)`.
pub fn decide(r: &Rule, limits: Limits) -> Result<Decision, AnalyzerError> {
    let started = Instant::now();
    let budget = Budget::new(limits);
    let outcome = match r.logic {
        Logic::Ws1s => decide_in::<WordAutomaton>(r, &budget),
        Logic::Ws2s => decide_in::<TreeAutomaton>(r, &budget),
    };
    let (verdict, finite_start) = match outcome {
        Ok(v) => v,
        Err(AnalyzerError::Engine(EngineError::ResourceExceeded { .. })) => {
            (Verdict::Unknown(UnknownReason::ResourceExceeded), None)
        }
        Err(e) => return Err(e),
    };
    if let Verdict::Loops { witness } = &verdict {
        if !check_recurrence_set(r, witness, limits)? {
            return Err(AnalyzerError::Internal(format!(
                "witness {{{}}} fails the recurrence check",
                format_set(witness)
            )));
        }
    }
    let stats = Stats {
        peak_states: budget.peak_states(),
        millis: started.elapsed().as_millis(),
    };
    Ok(Decision {
        verdict,
        finite_start,
        stats,
    })
}

fn decide_in<S: Structure>(
    r: &Rule,
    budget: &Budget,
) -> Result<(Verdict, Option<bool>), AnalyzerError> {
    let sets: S = compile(
        &recurrence_body(r),
        &TrackAssignment::new([set_var()]),
        budget,
    )?;
    if let Some(v) = sets.smallest_valuation()? {
        let witness = v.second[SET_VAR].iter().map(S::lift).collect();
        return Ok((Verdict::Loops { witness }, None));
    }
    let finite = sentence_holds(&finite_start_formula(r), S::LOGIC, budget)?;
    let verdict = if finite {
        Verdict::Terminates
    } else {
        Verdict::Unknown(UnknownReason::InfiniteStartSetNoFiniteRecurrence)
    };
    Ok((verdict, Some(finite)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpStage {
    /// The rule body over tracks `x,y`.
    Atom,
    PhiR,
    PhiPrime,
}

/// DOT rendering of the automaton compiled at `stage`.
pub fn dump(r: &Rule, stage: DumpStage, limits: Limits) -> Result<String, AnalyzerError> {
    fn go<S: Structure>(
        r: &Rule,
        stage: DumpStage,
        budget: &Budget,
    ) -> Result<String, AnalyzerError> {
        let (f, tracks, suffix) = match stage {
            DumpStage::Atom => (r.body.clone(), TrackAssignment::new([x(), y()]), "psi"),
            DumpStage::PhiR => (build_phi_r(r), TrackAssignment::new([]), "phi_r"),
            DumpStage::PhiPrime => (build_phi_prime_r(r), TrackAssignment::new([]), "phi_prime"),
        };
        let a: S = compile(&f, &tracks, budget)?;
        Ok(a.dot(&format!("{}_{suffix}", r.name)))
    }
    let budget = Budget::new(limits);
    match r.logic {
        Logic::Ws1s => go::<WordAutomaton>(r, stage, &budget),
        Logic::Ws2s => go::<TreeAutomaton>(r, stage, &budget),
    }
}
