//! Brute-force semantics over bounded domains, exhaustive recurrence-set search and
//! an operational simulator.
//!
//! Nothing here goes through the automata except [`simulate`], whose successor
//! choices are exact engine queries.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::analyzer::{AnalyzerError, Position, SuccessorSetView};
use crate::engine::{Limits, Valuation};
use crate::logic::{BasisAtom, Formula, Logic, Node, Rule, Step, Term, TermBase, TermPath, Var};

/// Largest domain [`search_recurrence_sets`] will enumerate subsets of.
pub const MAX_SEARCH_DOMAIN: usize = 15;

/// Successor-relation slack added to a search bound: positions for words, levels for trees.
pub const WORD_SLACK: usize = 4;
pub const TREE_SLACK: usize = 2;

/// Quantifier ranges. First-order quantifiers range over `domain(first)`, second-order
/// ones over all subsets of `domain(second)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub first: usize,
    pub second: usize,
}

impl Bounds {
    pub fn new(first: usize, second: usize) -> Self {
        Bounds { first, second }
    }

    pub fn uniform(b: usize) -> Self {
        Bounds {
            first: b,
            second: b,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search domain has {size} positions, more than {MAX_SEARCH_DOMAIN}")]
    DomainTooLarge { size: usize },
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
}

/// Positions the bounded evaluator can interpret terms over.
pub trait OraclePos: Ord + Copy + std::fmt::Debug {
    const LOGIC: Logic;

    /// Naturals `< size`, or tree nodes of length `< size`.
    fn domain(size: usize) -> Vec<Self>;
    fn constant(base: &TermBase) -> Option<Self>;
    fn follow(self, path: &TermPath) -> Option<Self>;
    fn successor(self, step: Step) -> Option<Self>;
    fn less(self, other: Self) -> bool;
    fn is_origin(self) -> bool;
    fn lift(self) -> Position;
    fn lower(p: Position) -> Option<Self>;
}

impl OraclePos for u32 {
    const LOGIC: Logic = Logic::Ws1s;

    fn domain(size: usize) -> Vec<u32> {
        (0..size as u32).collect()
    }

    fn constant(base: &TermBase) -> Option<u32> {
        matches!(base, TermBase::Zero).then_some(0)
    }

    fn follow(self, path: &TermPath) -> Option<u32> {
        match path {
            TermPath::Offset(n) => self.checked_add(*n),
            TermPath::Bits(_) => None,
        }
    }

    fn successor(self, step: Step) -> Option<u32> {
        match step {
            Step::Next => self.checked_add(1),
            Step::Left | Step::Right => None,
        }
    }

    fn less(self, other: u32) -> bool {
        self < other
    }

    fn is_origin(self) -> bool {
        self == 0
    }

    fn lift(self) -> Position {
        Position::Nat(self)
    }

    fn lower(p: Position) -> Option<u32> {
        match p {
            Position::Nat(n) => Some(n),
            Position::Node(_) => None,
        }
    }
}

impl OraclePos for Node {
    const LOGIC: Logic = Logic::Ws2s;

    fn domain(size: usize) -> Vec<Node> {
        Node::all_below(size)
    }

    fn constant(base: &TermBase) -> Option<Node> {
        matches!(base, TermBase::Epsilon).then_some(Node::ROOT)
    }

    fn follow(self, path: &TermPath) -> Option<Node> {
        match path {
            TermPath::Bits(w) => Some(self.concat(w)),
            TermPath::Offset(0) => Some(self),
            TermPath::Offset(_) => None,
        }
    }

    fn successor(self, step: Step) -> Option<Node> {
        match step {
            Step::Left => Some(self.child(false)),
            Step::Right => Some(self.child(true)),
            Step::Next => None,
        }
    }

    fn less(self, other: Node) -> bool {
        self.is_proper_prefix_of(&other)
    }

    fn is_origin(self) -> bool {
        self.is_root()
    }

    fn lift(self) -> Position {
        Position::Node(self)
    }

    fn lower(p: Position) -> Option<Node> {
        match p {
            Position::Node(n) => Some(n),
            Position::Nat(_) => None,
        }
    }
}

/// Truth value of `f` under `v`, with quantifiers restricted by `bounds`. Terms may
/// denote positions outside the bounds; only quantifiers are truncated. Unassigned
/// free variables make the atoms mentioning them false.
pub fn eval_bounded<P: OraclePos>(f: &Formula, v: &Valuation<P>, bounds: Bounds) -> bool {
    let mut ev = Evaluator {
        first: v.first.clone(),
        second: v.second.clone(),
        fo_domain: P::domain(bounds.first),
        so_domain: P::domain(bounds.second),
    };
    ev.eval(f)
}

struct Evaluator<P: OraclePos> {
    first: BTreeMap<String, P>,
    second: BTreeMap<String, BTreeSet<P>>,
    fo_domain: Vec<P>,
    so_domain: Vec<P>,
}

impl<P: OraclePos> Evaluator<P> {
    fn term(&self, t: &Term) -> Option<P> {
        let base = match &t.base {
            TermBase::Var(v) => *self.first.get(&v.name)?,
            other => P::constant(other)?,
        };
        base.follow(&t.path)
    }

    fn var(&self, v: &Var) -> Option<P> {
        self.first.get(&v.name).copied()
    }

    fn set_has(&self, set: &Var, p: P) -> bool {
        self.second.get(&set.name).is_some_and(|s| s.contains(&p))
    }

    fn basis(&self, a: &BasisAtom) -> Option<bool> {
        Some(match a {
            BasisAtom::Succ(step, x, y) => self.var(x)?.successor(*step) == Some(self.var(y)?),
            BasisAtom::Eq(x, y) => self.var(x)? == self.var(y)?,
            BasisAtom::Lt(x, y) => self.var(x)?.less(self.var(y)?),
            BasisAtom::In(x, set) => self.set_has(set, self.var(x)?),
            BasisAtom::Zero(x) | BasisAtom::Root(x) => self.var(x)?.is_origin(),
        })
    }

    fn eval(&mut self, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(a, b) => {
                matches!((self.term(a), self.term(b)), (Some(a), Some(b)) if a == b)
            }
            Formula::Lt(a, b) => {
                matches!((self.term(a), self.term(b)), (Some(a), Some(b)) if a.less(b))
            }
            Formula::Leq(a, b) => {
                matches!((self.term(a), self.term(b)), (Some(a), Some(b)) if a == b || a.less(b))
            }
            Formula::In(t, set) => self.term(t).is_some_and(|p| self.set_has(set, p)),
            Formula::Basis(a) => self.basis(a).unwrap_or(false),
            Formula::Not(a) => !self.eval(a),
            Formula::And(a, b) => self.eval(a) && self.eval(b),
            Formula::Or(a, b) => self.eval(a) || self.eval(b),
            Formula::Implies(a, b) => !self.eval(a) || self.eval(b),
            Formula::Iff(a, b) => self.eval(a) == self.eval(b),
            Formula::Exists(v, body) => self.quantify(v, body, true),
            Formula::Forall(v, body) => !self.quantify(v, body, false),
        }
    }

    /// Whether some value of `v` in its bounded range gives `body` the truth value `want`.
    fn quantify(&mut self, v: &Var, body: &Formula, want: bool) -> bool {
        if v.is_first_order() {
            let saved = self.first.get(&v.name).copied();
            let mut found = false;
            for p in self.fo_domain.clone() {
                self.first.insert(v.name.clone(), p);
                if self.eval(body) == want {
                    found = true;
                    break;
                }
            }
            match saved {
                Some(p) => self.first.insert(v.name.clone(), p),
                None => self.first.remove(&v.name),
            };
            found
        } else {
            let saved = self.second.remove(&v.name);
            let dom = self.so_domain.clone();
            let mut found = false;
            for mask in 0u64..1 << dom.len() {
                let set = dom
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &p)| p)
                    .collect();
                self.second.insert(v.name.clone(), set);
                if self.eval(body) == want {
                    found = true;
                    break;
                }
            }
            match saved {
                Some(s) => self.second.insert(v.name.clone(), s),
                None => self.second.remove(&v.name),
            };
            found
        }
    }
}

/// Domain size of a search bound: naturals `< bound`, or tree nodes of length `<= bound`.
fn search_size(logic: Logic, bound: usize) -> usize {
    match logic {
        Logic::Ws1s => bound,
        Logic::Ws2s => bound + 1,
    }
}

/// Successor relation of `r` on the search domain, evaluated with slack bounds.
fn successor_matrix<P: OraclePos>(r: &Rule, bound: usize) -> (Vec<P>, Vec<Vec<bool>>) {
    let dom = P::domain(search_size(r.logic, bound));
    let b = search_bounds(r.logic, bound);
    let matrix = dom
        .iter()
        .map(|&x| {
            dom.iter()
                .map(|&y| {
                    let v = Valuation::new()
                        .with_first(Rule::SOURCE, x)
                        .with_first(Rule::TARGET, y);
                    eval_bounded(&r.body, &v, b)
                })
                .collect()
        })
        .collect();
    (dom, matrix)
}

/// Bounds used to evaluate a rule body during search: the domain plus slack for
/// first-order witnesses, and a small second-order range.
pub fn search_bounds(logic: Logic, bound: usize) -> Bounds {
    match logic {
        Logic::Ws1s => Bounds::new(bound + WORD_SLACK, (bound + WORD_SLACK).min(10)),
        Logic::Ws2s => Bounds::new(bound + 1 + TREE_SLACK, (bound + 1 + TREE_SLACK).min(3)),
    }
}

/// The smallest recurrence set among positions below `bound` (naturals `< bound`, tree
/// nodes of length `<= bound`). Fewer elements win, then the lexicographically smaller
/// sorted element list. Successors are judged by the bounded evaluator.
pub fn search_recurrence_sets(
    r: &Rule,
    bound: usize,
) -> Result<Option<BTreeSet<Position>>, OracleError> {
    match r.logic {
        Logic::Ws1s => search_in::<u32>(r, bound),
        Logic::Ws2s => search_in::<Node>(r, bound),
    }
}

fn search_in<P: OraclePos>(
    r: &Rule,
    bound: usize,
) -> Result<Option<BTreeSet<Position>>, OracleError> {
    let n = P::domain(search_size(r.logic, bound)).len();
    if n > MAX_SEARCH_DOMAIN {
        return Err(OracleError::DomainTooLarge { size: n });
    }
    let (dom, succ) = successor_matrix::<P>(r, bound);
    let mut masks: Vec<u32> = (1u32..1 << n).collect();
    masks.sort_by_key(|&m| {
        (
            m.count_ones(),
            (0..n).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>(),
        )
    });
    let found = masks.into_iter().find(|&m| {
        (0..n)
            .filter(|i| m >> i & 1 == 1)
            .all(|i| (0..n).any(|j| m >> j & 1 == 1 && succ[i][j]))
    });
    Ok(found.map(|m| {
        (0..n)
            .filter(|i| m >> i & 1 == 1)
            .map(|i| dom[i].lift())
            .collect()
    }))
}

/// Whether the bounded successor graph has a cycle, that is, whether some
/// computation can run forever among the positions below `bound`.
pub fn lasso_exists(r: &Rule, bound: usize) -> bool {
    fn go<P: OraclePos>(r: &Rule, bound: usize) -> bool {
        let (dom, succ) = successor_matrix::<P>(r, bound);
        let mut alive = vec![true; dom.len()];
        loop {
            let dead: Vec<usize> = (0..dom.len())
                .filter(|&i| alive[i] && !(0..dom.len()).any(|j| alive[j] && succ[i][j]))
                .collect();
            if dead.is_empty() {
                break;
            }
            for i in dead {
                alive[i] = false;
            }
        }
        alive.iter().any(|&a| a)
    }
    match r.logic {
        Logic::Ws1s => go::<u32>(r, bound),
        Logic::Ws2s => go::<Node>(r, bound),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceEnd {
    /// The last position has no successor.
    Stuck,
    /// The step limit was reached.
    Truncated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub positions: Vec<Position>,
    pub end: TraceEnd,
}

impl Trace {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    /// Whether every consecutive pair is related by the rule.
    pub fn edges_hold(&self, view: &SuccessorSetView) -> bool {
        self.positions
            .windows(2)
            .all(|w| view.contains(&w[0], &w[1]))
    }
}

/// Runs the rule from `start` for at most `max_steps` steps, always moving to the
/// least successor, or the least successor inside `within` when given.
pub fn simulate(
    r: &Rule,
    start: Position,
    max_steps: usize,
    within: Option<&BTreeSet<Position>>,
    limits: Limits,
) -> Result<Trace, AnalyzerError> {
    let view = SuccessorSetView::new(r, limits)?;
    simulate_with(&view, start, max_steps, within)
}

/// [`simulate`] over an already compiled rule.
pub fn simulate_with(
    view: &SuccessorSetView,
    start: Position,
    max_steps: usize,
    within: Option<&BTreeSet<Position>>,
) -> Result<Trace, AnalyzerError> {
    let mut positions = vec![start];
    for _ in 0..max_steps {
        let cur = positions.last().unwrap();
        let next = match within {
            Some(set) => view.min_successor_within(cur, set),
            None => view.min_successor(cur)?,
        };
        match next {
            Some(p) => positions.push(p),
            None => {
                return Ok(Trace {
                    positions,
                    end: TraceEnd::Stuck,
                })
            }
        }
    }
    Ok(Trace {
        positions,
        end: TraceEnd::Truncated,
    })
}
