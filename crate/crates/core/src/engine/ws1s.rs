//! Deterministic multi-track word automata for WS1S.
//!
//! A word of length `L` encodes a valuation: position `i` belongs to a set variable
//! iff its track has a 1 at `i`; a first-order variable is a track with exactly one 1.
//! Languages are closed under appending all-zero symbols.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::hash::Hash;

use super::{
    atom_layout, first_order_mask, insert_bit, merge_tracks, restriction_map, Automaton, BoolOp,
    Budget, EngineError, Track, Valuation,
};
use crate::logic::{BasisAtom, Step};

const SINK: u8 = u8::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordAutomaton {
    tracks: Vec<Track>,
    init: u32,
    accepting: Vec<bool>,
    /// `delta[q * 2^k + s]`
    delta: Vec<u32>,
}

impl WordAutomaton {
    pub fn symbol_count(&self) -> usize {
        1 << self.tracks.len()
    }

    pub fn initial(&self) -> u32 {
        self.init
    }

    pub fn is_accepting(&self, q: u32) -> bool {
        self.accepting[q as usize]
    }

    pub fn step(&self, q: u32, s: u32) -> u32 {
        self.delta[q as usize * self.symbol_count() + s as usize]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.accepting.len() as u32).filter(|&q| self.accepting[q as usize])
    }

    pub fn accepts_word(&self, word: &[u32]) -> bool {
        let q = word.iter().fold(self.init, |q, &s| self.step(q, s));
        self.is_accepting(q)
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_witness().is_none()
    }

    /// The length-lexicographically smallest accepted word (symbols compared as integers).
    pub fn shortest_witness(&self) -> Option<Vec<u32>> {
        let n = self.accepting.len();
        let mut parent: Vec<Option<(u32, u32)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.init]);
        seen[self.init as usize] = true;
        while let Some(q) = queue.pop_front() {
            if self.is_accepting(q) {
                let mut word = vec![];
                let mut cur = q;
                while let Some((p, s)) = parent[cur as usize] {
                    word.push(s);
                    cur = p;
                }
                word.reverse();
                return Some(word);
            }
            for s in 0..self.symbol_count() as u32 {
                let t = self.step(q, s);
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    parent[t as usize] = Some((q, s));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Decodes a word into a valuation over this automaton's tracks.
    pub fn decode(&self, word: &[u32]) -> Result<Valuation<u32>, EngineError> {
        decode_word(&self.tracks, word)
    }

    /// Minimal encoding of `v` over this automaton's tracks, or `None` if a track's
    /// variable is unassigned.
    pub fn encode(&self, v: &Valuation<u32>) -> Option<Vec<u32>> {
        let len = self
            .tracks
            .iter()
            .filter_map(|t| {
                if t.var.is_first_order() {
                    v.first.get(&t.var.name).map(|&p| p + 1)
                } else {
                    v.second
                        .get(&t.var.name)
                        .map(|s| s.iter().max().map_or(0, |m| m + 1))
                }
            })
            .max()
            .unwrap_or(0);
        let mut word = vec![0u32; len as usize];
        for (i, t) in self.tracks.iter().enumerate() {
            if t.var.is_first_order() {
                let p = *v.first.get(&t.var.name)?;
                word[p as usize] |= 1 << i;
            } else {
                for &p in v.second.get(&t.var.name)? {
                    word[p as usize] |= 1 << i;
                }
            }
        }
        Some(word)
    }

    /// Runs the automaton on the minimal encoding of `v`. Unassigned variables reject.
    pub fn accepts(&self, v: &Valuation<u32>) -> bool {
        self.encode(v).is_some_and(|w| self.accepts_word(&w))
    }

    /// True iff no rejecting state reaches acceptance by reading all-zero symbols,
    /// i.e. acceptance is already saturated under padding.
    pub fn is_padding_saturated(&self) -> bool {
        (0..self.accepting.len() as u32)
            .all(|q| !self.is_accepting(self.step(q, 0)) || self.is_accepting(q))
    }

    pub fn minimize(&self) -> WordAutomaton {
        let n = self.accepting.len();
        let k = self.symbol_count();
        let mut class: Vec<u32> = renumber(&self.accepting);
        let mut count = distinct(&class);
        loop {
            let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
            let next: Vec<u32> = (0..n)
                .map(|q| {
                    let mut key = Vec::with_capacity(k + 1);
                    key.push(class[q]);
                    key.extend(
                        self.delta[q * k..(q + 1) * k]
                            .iter()
                            .map(|&t| class[t as usize]),
                    );
                    let fresh = ids.len() as u32;
                    *ids.entry(key).or_insert(fresh)
                })
                .collect();
            let c = ids.len();
            class = next;
            if c == count {
                break;
            }
            count = c;
        }
        let mut rep = vec![0u32; count];
        for q in (0..n).rev() {
            rep[class[q] as usize] = q as u32;
        }
        explore(
            self.tracks.clone(),
            class[self.init as usize],
            |&c, s| class[self.step(rep[c as usize], s) as usize],
            |&c| self.accepting[rep[c as usize] as usize],
            &Budget::unlimited(),
        )
        .expect("minimization never grows an automaton")
    }

    /// Graphviz rendering with canonical state numbers. Edges list their symbols as bit
    /// strings in track order.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.tracks.iter().map(|t| t.var.name.as_str()).collect();
        let _ = writeln!(out, "digraph \"{name}\" {{");
        let _ = writeln!(out, "  rankdir=LR;");
        let _ = writeln!(out, "  label=\"tracks: {}\";", header.join(","));
        let _ = writeln!(out, "  init [shape=point];");
        for q in 0..self.accepting.len() {
            let shape = if self.accepting[q] {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(out, "  {q} [shape={shape}];");
        }
        let _ = writeln!(out, "  init -> {};", self.init);
        for q in 0..self.accepting.len() as u32 {
            let mut by_target: Vec<(u32, Vec<String>)> = vec![];
            for s in 0..self.symbol_count() as u32 {
                let t = self.step(q, s);
                let label = symbol_string(s, self.tracks.len());
                match by_target.iter_mut().find(|(u, _)| *u == t) {
                    Some((_, ls)) => ls.push(label),
                    None => by_target.push((t, vec![label])),
                }
            }
            for (t, labels) in by_target {
                let _ = writeln!(out, "  {q} -> {t} [label=\"{}\"];", labels.join(","));
            }
        }
        out.push_str("}\n");
        out
    }

    fn well_formed(tracks: Vec<Track>, budget: &Budget) -> Result<WordAutomaton, EngineError> {
        let fo = first_order_mask(&tracks);
        explore(
            tracks,
            Some(0u32),
            |st, s| match st {
                Some(seen) if s & fo & seen == 0 => Some(seen | (s & fo)),
                _ => None,
            },
            |st| *st == Some(fo),
            budget,
        )
    }
}

fn symbol_string(s: u32, k: usize) -> String {
    if k == 0 {
        return "-".to_string();
    }
    (0..k)
        .map(|i| if s >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn renumber(acc: &[bool]) -> Vec<u32> {
    let first = acc.first().copied().unwrap_or(false);
    acc.iter()
        .map(|&a| if a == first { 0 } else { 1 })
        .collect()
}

fn distinct(class: &[u32]) -> usize {
    let mut seen: Vec<u32> = class.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Builds the reachable part of a deterministic automaton given by a state type and a
/// transition function. States are numbered in breadth-first order, symbols ascending.
pub(crate) fn explore<S: Hash + Eq + Clone>(
    tracks: Vec<Track>,
    init: S,
    mut step: impl FnMut(&S, u32) -> S,
    accept: impl Fn(&S) -> bool,
    budget: &Budget,
) -> Result<WordAutomaton, EngineError> {
    budget.check_tracks(tracks.len())?;
    let k = 1usize << tracks.len();
    let mut ids: HashMap<S, u32> = HashMap::new();
    let mut states = vec![init.clone()];
    ids.insert(init, 0);
    let mut delta: Vec<u32> = vec![];
    let mut i = 0;
    while i < states.len() {
        let cur = states[i].clone();
        for s in 0..k as u32 {
            let t = step(&cur, s);
            let id = match ids.get(&t) {
                Some(&id) => id,
                None => {
                    let id = states.len() as u32;
                    ids.insert(t.clone(), id);
                    states.push(t);
                    budget.check_states(states.len())?;
                    id
                }
            };
            delta.push(id);
        }
        i += 1;
    }
    budget.check_states(states.len())?;
    let accepting = states.iter().map(accept).collect();
    Ok(WordAutomaton {
        tracks,
        init: 0,
        accepting,
        delta,
    })
}

pub(crate) fn decode_word(tracks: &[Track], word: &[u32]) -> Result<Valuation<u32>, EngineError> {
    let mut v = Valuation::new();
    for (i, t) in tracks.iter().enumerate() {
        let positions: Vec<u32> = word
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >> i & 1 == 1)
            .map(|(p, _)| p as u32)
            .collect();
        if t.var.is_first_order() {
            if positions.len() != 1 {
                return Err(EngineError::Malformed(format!(
                    "first-order track `{}` has {} set bits",
                    t.var.name,
                    positions.len()
                )));
            }
            v.first.insert(t.var.name.clone(), positions[0]);
        } else {
            v.second
                .insert(t.var.name.clone(), positions.into_iter().collect());
        }
    }
    Ok(v)
}

impl Automaton for WordAutomaton {
    fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    fn state_count(&self) -> usize {
        self.accepting.len()
    }

    fn atom(atom: &BasisAtom, tracks: &[Track], budget: &Budget) -> Result<Self, EngineError> {
        let (tracks, roles) = atom_layout(tracks);
        let bit = |s: u32, role: usize| s >> roles[role] & 1 == 1;
        // Each machine reads one position per symbol; `SINK` absorbs.
        let a = match atom {
            BasisAtom::Succ(Step::Next, ..) => explore(
                tracks,
                0u8,
                |&q, s| match (q, bit(s, 0), bit(s, 1)) {
                    (0, false, false) => 0,
                    (0, true, false) => 1,
                    (1, false, true) => 2,
                    (2, false, false) => 2,
                    _ => SINK,
                },
                |&q| q == 2,
                budget,
            )?,
            BasisAtom::Eq(..) => explore(
                tracks,
                0u8,
                |&q, s| match (q, bit(s, 0), bit(s, 1)) {
                    (0, false, false) => 0,
                    (0, true, true) => 1,
                    (1, false, false) => 1,
                    _ => SINK,
                },
                |&q| q == 1,
                budget,
            )?,
            BasisAtom::Lt(..) => explore(
                tracks,
                0u8,
                |&q, s| match (q, bit(s, 0), bit(s, 1)) {
                    (0, false, false) => 0,
                    (0, true, false) => 1,
                    (1, false, false) => 1,
                    (1, false, true) => 2,
                    (2, false, false) => 2,
                    _ => SINK,
                },
                |&q| q == 2,
                budget,
            )?,
            BasisAtom::In(..) => explore(
                tracks,
                0u8,
                |&q, s| match (q, bit(s, 0), bit(s, 1)) {
                    (0, false, _) => 0,
                    (0, true, true) => 1,
                    (1, false, _) => 1,
                    _ => SINK,
                },
                |&q| q == 1,
                budget,
            )?,
            BasisAtom::Zero(_) => explore(
                tracks,
                0u8,
                |&q, s| match (q, bit(s, 0)) {
                    (0, true) => 1,
                    (1, false) => 1,
                    _ => SINK,
                },
                |&q| q == 1,
                budget,
            )?,
            BasisAtom::Succ(..) | BasisAtom::Root(_) => {
                return Err(EngineError::Unsupported(
                    "tree atoms have no word automaton",
                ))
            }
        };
        Ok(a.minimize())
    }

    fn universe(tracks: Vec<Track>, budget: &Budget) -> Result<Self, EngineError> {
        Ok(Self::well_formed(tracks, budget)?.minimize())
    }

    fn empty(tracks: Vec<Track>) -> Self {
        let k = 1usize << tracks.len();
        WordAutomaton {
            tracks,
            init: 0,
            accepting: vec![false],
            delta: vec![0; k],
        }
    }

    fn product(&self, other: &Self, op: BoolOp, budget: &Budget) -> Result<Self, EngineError> {
        let union = merge_tracks(&self.tracks, &other.tracks);
        let lm = restriction_map(&union, &self.tracks);
        let rm = restriction_map(&union, &other.tracks);
        let a = explore(
            union,
            (self.init, other.init),
            |&(p, q), s| (self.step(p, lm[s as usize]), other.step(q, rm[s as usize])),
            |&(p, q)| match op {
                BoolOp::And => self.is_accepting(p) && other.is_accepting(q),
                BoolOp::Or => self.is_accepting(p) || other.is_accepting(q),
            },
            budget,
        )?;
        Ok(a.minimize())
    }

    fn complement(&self, budget: &Budget) -> Result<Self, EngineError> {
        let flipped = WordAutomaton {
            tracks: self.tracks.clone(),
            init: self.init,
            accepting: self.accepting.iter().map(|a| !a).collect(),
            delta: self.delta.clone(),
        };
        let wf = Self::well_formed(self.tracks.clone(), budget)?;
        flipped.product(&wf, BoolOp::And, budget)
    }

    fn project(&self, id: u32, budget: &Budget) -> Result<Self, EngineError> {
        let Some(j) = self.tracks.iter().position(|t| t.id == id) else {
            return Ok(self.clone());
        };
        let mut tracks = self.tracks.clone();
        tracks.remove(j);
        let mut a = explore(
            tracks,
            vec![self.init],
            |set: &Vec<u32>, s| {
                let (s0, s1) = (insert_bit(s, j, false), insert_bit(s, j, true));
                let mut next: Vec<u32> = set
                    .iter()
                    .flat_map(|&q| [self.step(q, s0), self.step(q, s1)])
                    .collect();
                next.sort_unstable();
                next.dedup();
                next
            },
            |set| set.iter().any(|&q| self.is_accepting(q)),
            budget,
        )?;
        // Padding saturation: accept wherever all-zero symbols lead to acceptance.
        loop {
            let mut changed = false;
            for q in 0..a.accepting.len() as u32 {
                if !a.accepting[q as usize] && a.is_accepting(a.step(q, 0)) {
                    a.accepting[q as usize] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(a.minimize())
    }
}
