//! Formula-to-automaton compilation shared by the word (WS1S) and tree (WS2S) engines.
//!
//! Every variable owns one bit track; first-order variables are encoded as singleton
//! sets. Automata are deterministic and complete, nondeterminism only appears inside
//! projection.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::logic::{is_normal, normalize, BasisAtom, Formula, Var};

pub mod ws1s;
pub mod ws2s;

pub use ws1s::WordAutomaton;
pub use ws2s::{LabeledTree, TreeAutomaton};

/// Default ceiling on the number of states of any intermediate automaton.
pub const DEFAULT_MAX_STATES: usize = 1_000_000;
/// Default ceiling on the number of simultaneous tracks (alphabet of `2^k` symbols).
pub const DEFAULT_MAX_TRACKS: usize = 16;
/// Ceiling on the size of an explicit tree transition table (`states^2 * 2^k` entries).
pub const MAX_TREE_TABLE: usize = 1 << 25;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("resource limit exceeded: {what} (limit {limit})")]
    ResourceExceeded { what: &'static str, limit: usize },
    #[error("variable `{0}` is free in the formula but has no track")]
    UnknownVariable(String),
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_tracks: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: DEFAULT_MAX_STATES,
            max_tracks: DEFAULT_MAX_TRACKS,
        }
    }
}

impl Limits {
    pub fn with_max_states(max_states: usize) -> Self {
        Limits {
            max_states,
            ..Limits::default()
        }
    }
}

/// Limits plus the running peak of automaton sizes seen during one compilation.
#[derive(Debug, Default)]
pub struct Budget {
    pub limits: Limits,
    peak: Cell<usize>,
}

impl Budget {
    pub fn new(limits: Limits) -> Self {
        Budget {
            limits,
            peak: Cell::new(0),
        }
    }

    pub(crate) fn unlimited() -> Self {
        Budget::new(Limits {
            max_states: usize::MAX,
            max_tracks: usize::MAX,
        })
    }

    pub fn peak_states(&self) -> usize {
        self.peak.get()
    }

    pub(crate) fn check_states(&self, n: usize) -> Result<(), EngineError> {
        if n > self.peak.get() {
            self.peak.set(n);
        }
        if n > self.limits.max_states {
            return Err(EngineError::ResourceExceeded {
                what: "automaton states",
                limit: self.limits.max_states,
            });
        }
        Ok(())
    }

    pub(crate) fn check_tracks(&self, k: usize) -> Result<(), EngineError> {
        if k > self.limits.max_tracks {
            return Err(EngineError::ResourceExceeded {
                what: "tracks",
                limit: self.limits.max_tracks,
            });
        }
        Ok(())
    }
}

/// One bit lane of the alphabet. Tracks are ordered by `id`; the free variables of a
/// compilation get the ids `0..n` in assignment order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Track {
    pub id: u32,
    pub var: Var,
}

/// The ordered free variables of a compilation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrackAssignment {
    vars: Vec<Var>,
}

impl TrackAssignment {
    pub fn new(vars: impl IntoIterator<Item = Var>) -> Self {
        let mut out: Vec<Var> = vec![];
        for v in vars {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        TrackAssignment { vars: out }
    }

    /// Free variables of `f`, first-order ones first, each group sorted by name.
    pub fn of(f: &Formula) -> Self {
        let fv = f.free_vars();
        Self::new(
            fv.first
                .into_iter()
                .map(Var::first)
                .chain(fv.second.into_iter().map(Var::second)),
        )
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn tracks(&self) -> Vec<Track> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| Track {
                id: i as u32,
                var: v.clone(),
            })
            .collect()
    }
}

/// An assignment of positions to first-order variables and finite position sets to
/// second-order variables, keyed by name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Valuation<P: Ord> {
    pub first: BTreeMap<String, P>,
    pub second: BTreeMap<String, BTreeSet<P>>,
}

impl<P: Ord> Default for Valuation<P> {
    fn default() -> Self {
        Valuation {
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }
}

impl<P: Ord + Clone> Valuation<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_first(mut self, name: &str, p: P) -> Self {
        self.first.insert(name.to_string(), p);
        self
    }

    pub fn with_set(mut self, name: &str, ps: impl IntoIterator<Item = P>) -> Self {
        self.second
            .insert(name.to_string(), ps.into_iter().collect());
        self
    }

    /// Every position mentioned by the valuation.
    pub fn positions(&self) -> impl Iterator<Item = &P> {
        self.first.values().chain(self.second.values().flatten())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

/// Operations the generic compiler needs from an automaton family.
pub trait Automaton: Sized {
    fn tracks(&self) -> &[Track];
    fn state_count(&self) -> usize;
    /// Automaton of a basis atom; `tracks[i]` carries the `i`-th variable of the atom.
    fn atom(atom: &BasisAtom, tracks: &[Track], budget: &Budget) -> Result<Self, EngineError>;
    /// Accepts every encoding that is well formed on the first-order tracks.
    fn universe(tracks: Vec<Track>, budget: &Budget) -> Result<Self, EngineError>;
    fn empty(tracks: Vec<Track>) -> Self;
    fn product(&self, other: &Self, op: BoolOp, budget: &Budget) -> Result<Self, EngineError>;
    fn complement(&self, budget: &Budget) -> Result<Self, EngineError>;
    /// Existential projection of the track with the given id.
    fn project(&self, id: u32, budget: &Budget) -> Result<Self, EngineError>;
}

/// Compiles `f` over the given free-variable tracks. Formulas outside the basis
/// fragment are normalized first. The result carries exactly the tracks of `tracks`,
/// in order, and accepts exactly the encodings of satisfying valuations.
pub fn compile<A: Automaton>(
    f: &Formula,
    tracks: &TrackAssignment,
    budget: &Budget,
) -> Result<A, EngineError> {
    let normal;
    let f = if is_normal(f) {
        f
    } else {
        normal = normalize(f);
        &normal
    };
    let outer = tracks.tracks();
    budget.check_tracks(outer.len())?;
    let mut c = Compiler {
        env: outer.clone(),
        next_id: outer.len() as u32,
        budget,
    };
    let body: A = c.formula(f)?;
    let frame = A::universe(outer, budget)?;
    frame.product(&body, BoolOp::And, budget)
}

struct Compiler<'a> {
    env: Vec<Track>,
    next_id: u32,
    budget: &'a Budget,
}

impl Compiler<'_> {
    fn lookup(&self, v: &Var) -> Result<Track, EngineError> {
        self.env
            .iter()
            .rev()
            .find(|t| t.var == *v)
            .cloned()
            .ok_or_else(|| EngineError::UnknownVariable(v.name.clone()))
    }

    fn formula<A: Automaton>(&mut self, f: &Formula) -> Result<A, EngineError> {
        match f {
            Formula::True => A::universe(vec![], self.budget),
            Formula::False => Ok(A::empty(vec![])),
            Formula::Basis(a) => {
                let tracks = a
                    .vars()
                    .into_iter()
                    .map(|v| self.lookup(v))
                    .collect::<Result<Vec<_>, _>>()?;
                A::atom(a, &tracks, self.budget)
            }
            Formula::Not(a) => self.formula::<A>(a)?.complement(self.budget),
            Formula::And(a, b) => {
                let l: A = self.formula(a)?;
                let r: A = self.formula(b)?;
                l.product(&r, BoolOp::And, self.budget)
            }
            Formula::Or(a, b) => {
                let l: A = self.formula(a)?;
                let r: A = self.formula(b)?;
                l.product(&r, BoolOp::Or, self.budget)
            }
            Formula::Exists(v, body) => {
                let id = self.next_id;
                self.next_id += 1;
                self.env.push(Track { id, var: v.clone() });
                let inner = self.formula::<A>(body);
                self.env.pop();
                inner?.project(id, self.budget)
            }
            other => {
                // `compile` normalizes before descending, so this is unreachable from the API.
                let n = normalize(other);
                self.formula(&n)
            }
        }
    }
}

/// Tracks of `a ∪ b`, sorted by id.
pub(crate) fn merge_tracks(a: &[Track], b: &[Track]) -> Vec<Track> {
    let mut out: Vec<Track> = a.to_vec();
    for t in b {
        if !out.iter().any(|u| u.id == t.id) {
            out.push(t.clone());
        }
    }
    out.sort_by_key(|t| t.id);
    out
}

/// For every symbol over `union`, the corresponding symbol over `sub`.
pub(crate) fn restriction_map(union: &[Track], sub: &[Track]) -> Vec<u32> {
    let positions: Vec<usize> = sub
        .iter()
        .map(|t| {
            union
                .iter()
                .position(|u| u.id == t.id)
                .expect("sub-track missing from union")
        })
        .collect();
    (0..1u32 << union.len())
        .map(|s| {
            positions
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &p)| acc | ((s >> p) & 1) << i)
        })
        .collect()
}

/// Inserts `bit` at index `j` of the symbol `s`.
pub(crate) fn insert_bit(s: u32, j: usize, bit: bool) -> u32 {
    let low = s & ((1 << j) - 1);
    let high = (s >> j) << (j + 1);
    high | (bit as u32) << j | low
}

/// Bit mask of the first-order tracks.
pub(crate) fn first_order_mask(tracks: &[Track]) -> u32 {
    tracks
        .iter()
        .enumerate()
        .filter(|(_, t)| t.var.is_first_order())
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// For each variable of a basis atom, the index of its (deduplicated) track.
pub(crate) fn atom_layout(tracks: &[Track]) -> (Vec<Track>, Vec<usize>) {
    let mut uniq: Vec<Track> = vec![];
    let mut roles = vec![];
    for t in tracks {
        match uniq.iter().position(|u| u.id == t.id) {
            Some(i) => roles.push(i),
            None => {
                roles.push(uniq.len());
                uniq.push(t.clone());
            }
        }
    }
    // keep tracks sorted by id and remap roles accordingly
    let mut order: Vec<usize> = (0..uniq.len()).collect();
    order.sort_by_key(|&i| uniq[i].id);
    let sorted: Vec<Track> = order.iter().map(|&i| uniq[i].clone()).collect();
    let roles = roles
        .into_iter()
        .map(|r| order.iter().position(|&i| i == r).unwrap())
        .collect();
    (sorted, roles)
}
