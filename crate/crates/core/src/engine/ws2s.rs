//! Deterministic bottom-up automata over finite binary trees for WS2S.
//!
//! A valuation is encoded on an explicit finite tree whose internal nodes have both
//! children; every node carries one bit per track. Everything below the explicit tree
//! is implicit all-zero padding, evaluated to the frontier state.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;
use std::rc::Rc;

use super::{
    atom_layout, first_order_mask, insert_bit, merge_tracks, restriction_map, Automaton, BoolOp,
    Budget, EngineError, Track, Valuation, MAX_TREE_TABLE,
};
use crate::logic::{BasisAtom, Node, Step};

const SINK: u8 = u8::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeAutomaton {
    tracks: Vec<Track>,
    frontier: u32,
    accepting: Vec<bool>,
    /// `delta[(left * n + right) * 2^k + s]`
    delta: Vec<u32>,
}

/// A finite binary tree labelled with track symbols. The domain is prefix-closed and
/// every internal node has both children.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledTree {
    pub labels: BTreeMap<Node, u32>,
}

impl LabeledTree {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_well_shaped(&self) -> bool {
        self.labels.keys().all(|n| match n.parent() {
            None => true,
            Some(p) => {
                self.labels.contains_key(&p)
                    && self.labels.contains_key(&p.child(!n.last().unwrap()))
            }
        })
    }

    /// Indented `position: label` listing, children below their parent, left first.
    pub fn render(&self, tracks: &[Track]) -> String {
        let mut out = String::new();
        if self.labels.is_empty() {
            out.push_str("(empty tree)\n");
            return out;
        }
        self.render_node(Node::ROOT, tracks, 0, &mut out);
        out
    }

    fn render_node(&self, n: Node, tracks: &[Track], depth: usize, out: &mut String) {
        let Some(&s) = self.labels.get(&n) else {
            return;
        };
        let members: Vec<&str> = tracks
            .iter()
            .enumerate()
            .filter(|(i, _)| s >> i & 1 == 1)
            .map(|(_, t)| t.var.name.as_str())
            .collect();
        let _ = writeln!(
            out,
            "{}{}: {{{}}}",
            "  ".repeat(depth),
            n.to_literal(),
            members.join(",")
        );
        self.render_node(n.child(false), tracks, depth + 1, out);
        self.render_node(n.child(true), tracks, depth + 1, out);
    }
}

impl TreeAutomaton {
    pub fn symbol_count(&self) -> usize {
        1 << self.tracks.len()
    }

    pub fn frontier(&self) -> u32 {
        self.frontier
    }

    pub fn is_accepting(&self, q: u32) -> bool {
        self.accepting[q as usize]
    }

    pub fn step(&self, left: u32, right: u32, s: u32) -> u32 {
        let n = self.accepting.len();
        self.delta[(left as usize * n + right as usize) * self.symbol_count() + s as usize]
    }

    /// State reached at the root of `t`.
    pub fn run(&self, t: &LabeledTree) -> u32 {
        self.run_at(t, Node::ROOT)
    }

    fn run_at(&self, t: &LabeledTree, n: Node) -> u32 {
        match t.labels.get(&n) {
            None => self.frontier,
            Some(&s) => self.step(
                self.run_at(t, n.child(false)),
                self.run_at(t, n.child(true)),
                s,
            ),
        }
    }

    pub fn accepts_tree(&self, t: &LabeledTree) -> bool {
        self.is_accepting(self.run(t))
    }

    pub fn is_empty(&self) -> bool {
        let mut reach = vec![false; self.accepting.len()];
        reach[self.frontier as usize] = true;
        loop {
            let mut changed = false;
            let live: Vec<u32> = (0..reach.len() as u32)
                .filter(|&q| reach[q as usize])
                .collect();
            for &a in &live {
                for &b in &live {
                    for s in 0..self.symbol_count() as u32 {
                        let t = self.step(a, b, s) as usize;
                        if !reach[t] {
                            reach[t] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        !reach.iter().zip(&self.accepting).any(|(&r, &a)| r && a)
    }

    /// An accepted tree with the fewest nodes; ties are broken by the preorder label
    /// sequence, absent children sorting last. A lone marked position is therefore
    /// minimal in length-lex order.
    pub fn smallest_witness(&self) -> Option<LabeledTree> {
        let n = self.accepting.len();
        let mut best: Vec<Option<Witness>> = vec![None; n];
        best[self.frontier as usize] = Some(Witness::leaf());
        loop {
            let mut changed = false;
            for a in 0..n {
                let Some(wa) = best[a].clone() else { continue };
                for b in 0..n {
                    let Some(wb) = best[b].clone() else { continue };
                    for s in 0..self.symbol_count() as u32 {
                        let t = self.step(a as u32, b as u32, s) as usize;
                        let cand = Witness::node(s, &wa, &wb);
                        if best[t]
                            .as_ref()
                            .is_none_or(|cur| cand.cmp_key(cur) == Ordering::Less)
                        {
                            best[t] = Some(cand);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let winner = (0..n)
            .filter(|&q| self.accepting[q])
            .filter_map(|q| best[q].as_ref())
            .min_by(|a, b| a.cmp_key(b))?;
        let mut t = LabeledTree::default();
        winner.place(Node::ROOT, &mut t);
        // explicit zero siblings keep the shape binary-complete; padding-closed
        // languages are unaffected
        let missing: Vec<Node> = t
            .labels
            .keys()
            .filter_map(|n| n.parent().map(|p| p.child(!n.last().unwrap())))
            .filter(|n| !t.labels.contains_key(n))
            .collect();
        for n in missing {
            t.labels.insert(n, 0);
        }
        Some(t)
    }

    pub fn decode(&self, t: &LabeledTree) -> Result<Valuation<Node>, EngineError> {
        let mut v = Valuation::new();
        for (i, tr) in self.tracks.iter().enumerate() {
            let nodes: BTreeSet<Node> = t
                .labels
                .iter()
                .filter(|(_, &s)| s >> i & 1 == 1)
                .map(|(&n, _)| n)
                .collect();
            if tr.var.is_first_order() {
                if nodes.len() != 1 {
                    return Err(EngineError::Malformed(format!(
                        "first-order track `{}` has {} set bits",
                        tr.var.name,
                        nodes.len()
                    )));
                }
                v.first
                    .insert(tr.var.name.clone(), *nodes.iter().next().unwrap());
            } else {
                v.second.insert(tr.var.name.clone(), nodes);
            }
        }
        Ok(v)
    }

    /// Minimal explicit tree carrying `v`: the prefix closure of all mentioned nodes,
    /// completed with siblings. `None` if a track's variable is unassigned.
    pub fn encode(&self, v: &Valuation<Node>) -> Option<LabeledTree> {
        let mut labels: BTreeMap<Node, u32> = BTreeMap::new();
        let mark = |n: Node, bit: u32, labels: &mut BTreeMap<Node, u32>| {
            *labels.entry(n).or_insert(0) |= bit;
            let mut cur = n;
            while let Some(p) = cur.parent() {
                labels.entry(p).or_insert(0);
                labels.entry(p.child(!cur.last().unwrap())).or_insert(0);
                cur = p;
            }
        };
        for (i, t) in self.tracks.iter().enumerate() {
            if t.var.is_first_order() {
                mark(*v.first.get(&t.var.name)?, 1 << i, &mut labels);
            } else {
                for &n in v.second.get(&t.var.name)? {
                    mark(n, 1 << i, &mut labels);
                }
            }
        }
        Some(LabeledTree { labels })
    }

    /// Runs the automaton on the minimal encoding of `v`. Unassigned variables reject.
    pub fn accepts(&self, v: &Valuation<Node>) -> bool {
        self.encode(v).is_some_and(|t| self.accepts_tree(&t))
    }

    /// True iff an explicit all-zero leaf behaves exactly like the frontier. Holds for
    /// every minimal automaton whose language is padding-closed.
    pub fn is_padding_saturated(&self) -> bool {
        self.step(self.frontier, self.frontier, 0) == self.frontier
    }

    pub fn minimize(&self) -> TreeAutomaton {
        let n = self.accepting.len();
        let k = self.symbol_count();
        let first = self.accepting.first().copied().unwrap_or(false);
        let mut class: Vec<u32> = self
            .accepting
            .iter()
            .map(|&a| (a != first) as u32)
            .collect();
        let mut count = {
            let mut c = class.clone();
            c.sort_unstable();
            c.dedup();
            c.len()
        };
        loop {
            let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
            let next: Vec<u32> = (0..n as u32)
                .map(|p| {
                    let mut key = Vec::with_capacity(1 + 2 * n * k);
                    key.push(class[p as usize]);
                    for r in 0..n as u32 {
                        for s in 0..k as u32 {
                            key.push(class[self.step(p, r, s) as usize]);
                            key.push(class[self.step(r, p, s) as usize]);
                        }
                    }
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
        explore_tree(
            self.tracks.clone(),
            class[self.frontier as usize],
            |&a, &b, s| class[self.step(rep[a as usize], rep[b as usize], s) as usize],
            |&c| self.accepting[rep[c as usize] as usize],
            &Budget::unlimited(),
        )
        .expect("minimization never grows an automaton")
    }

    /// Graphviz rendering. Each transition group `(left, right) -> target` becomes an
    /// auxiliary box node labelled with its symbols.
    pub fn to_dot(&self, name: &str) -> String {
        let n = self.accepting.len() as u32;
        let mut out = String::new();
        let header: Vec<&str> = self.tracks.iter().map(|t| t.var.name.as_str()).collect();
        let _ = writeln!(out, "digraph \"{name}\" {{");
        let _ = writeln!(out, "  label=\"tracks: {}\";", header.join(","));
        let _ = writeln!(out, "  frontier [shape=point];");
        for q in 0..n {
            let shape = if self.is_accepting(q) {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(out, "  q{q} [label=\"{q}\", shape={shape}];");
        }
        let _ = writeln!(out, "  frontier -> q{};", self.frontier);
        for l in 0..n {
            for r in 0..n {
                let mut by_target: Vec<(u32, Vec<String>)> = vec![];
                for s in 0..self.symbol_count() as u32 {
                    let t = self.step(l, r, s);
                    let label = symbol_string(s, self.tracks.len());
                    match by_target.iter_mut().find(|(u, _)| *u == t) {
                        Some((_, ls)) => ls.push(label),
                        None => by_target.push((t, vec![label])),
                    }
                }
                for (t, labels) in by_target {
                    let aux = format!("t{l}_{r}_{t}");
                    let _ = writeln!(out, "  {aux} [shape=box, label=\"{}\"];", labels.join(","));
                    let _ = writeln!(out, "  q{l} -> {aux} [label=\"L\"];");
                    let _ = writeln!(out, "  q{r} -> {aux} [label=\"R\"];");
                    let _ = writeln!(out, "  {aux} -> q{t};");
                }
            }
        }
        out.push_str("}\n");
        out
    }

    fn well_formed(tracks: Vec<Track>, budget: &Budget) -> Result<TreeAutomaton, EngineError> {
        let fo = first_order_mask(&tracks);
        explore_tree(
            tracks,
            Some(0u32),
            |l, r, s| match (l, r) {
                (Some(l), Some(r)) if l & r == 0 && (l | r) & s & fo == 0 => Some(l | r | (s & fo)),
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

const ABSENT: u32 = u32::MAX;

#[derive(Debug)]
enum WTree {
    Leaf,
    Node(u32, Rc<WTree>, Rc<WTree>),
}

#[derive(Clone, Debug)]
struct Witness {
    size: usize,
    /// Preorder labels, `ABSENT` for a missing child.
    code: Rc<Vec<u32>>,
    tree: Rc<WTree>,
}

impl Witness {
    fn leaf() -> Self {
        Witness {
            size: 0,
            code: Rc::new(vec![ABSENT]),
            tree: Rc::new(WTree::Leaf),
        }
    }

    fn node(s: u32, l: &Witness, r: &Witness) -> Self {
        let mut code = Vec::with_capacity(1 + l.code.len() + r.code.len());
        code.push(s);
        code.extend_from_slice(&l.code);
        code.extend_from_slice(&r.code);
        Witness {
            size: 1 + l.size + r.size,
            code: Rc::new(code),
            tree: Rc::new(WTree::Node(s, l.tree.clone(), r.tree.clone())),
        }
    }

    fn cmp_key(&self, other: &Witness) -> Ordering {
        self.size
            .cmp(&other.size)
            .then_with(|| self.code.cmp(&other.code))
    }

    fn place(&self, at: Node, t: &mut LabeledTree) {
        fn go(w: &WTree, at: Node, t: &mut LabeledTree) {
            if let WTree::Node(s, l, r) = w {
                t.labels.insert(at, *s);
                go(l, at.child(false), t);
                go(r, at.child(true), t);
            }
        }
        go(&self.tree, at, t);
    }
}

/// Builds the reachable part of a deterministic bottom-up automaton given by a state
/// type and a transition function. States are numbered in discovery order: state `m`
/// is combined with every earlier state (both sides) before state `m + 1`.
pub(crate) fn explore_tree<S: Hash + Eq + Clone>(
    tracks: Vec<Track>,
    frontier: S,
    mut step: impl FnMut(&S, &S, u32) -> S,
    accept: impl Fn(&S) -> bool,
    budget: &Budget,
) -> Result<TreeAutomaton, EngineError> {
    budget.check_tracks(tracks.len())?;
    let k = 1usize << tracks.len();
    let mut ids: HashMap<S, u32> = HashMap::new();
    let mut states = vec![frontier.clone()];
    ids.insert(frontier, 0);
    // transitions in processing order: for m, for j <= m: (m, j) then (j, m) if j != m
    let mut flat: Vec<u32> = vec![];
    let mut m = 0;
    while m < states.len() {
        for j in 0..=m {
            let pairs: &[(usize, usize)] = if j == m { &[(m, m)] } else { &[(m, j), (j, m)] };
            for &(a, b) in pairs {
                let (sa, sb) = (states[a].clone(), states[b].clone());
                for s in 0..k as u32 {
                    let t = step(&sa, &sb, s);
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
                    flat.push(id);
                }
                if flat.len() > MAX_TREE_TABLE {
                    return Err(EngineError::ResourceExceeded {
                        what: "tree transition table",
                        limit: MAX_TREE_TABLE,
                    });
                }
            }
        }
        m += 1;
    }
    let n = states.len();
    budget.check_states(n)?;
    if n * n * k > MAX_TREE_TABLE {
        return Err(EngineError::ResourceExceeded {
            what: "tree transition table",
            limit: MAX_TREE_TABLE,
        });
    }
    let mut delta = vec![0u32; n * n * k];
    let mut it = flat.into_iter();
    for m in 0..n {
        for j in 0..=m {
            let pairs: &[(usize, usize)] = if j == m { &[(m, m)] } else { &[(m, j), (j, m)] };
            for &(a, b) in pairs {
                for s in 0..k {
                    delta[(a * n + b) * k + s] =
                        it.next().expect("transition recorded during exploration");
                }
            }
        }
    }
    let accepting = states.iter().map(accept).collect();
    Ok(TreeAutomaton {
        tracks,
        frontier: 0,
        accepting,
        delta,
    })
}

impl Automaton for TreeAutomaton {
    fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    fn state_count(&self) -> usize {
        self.accepting.len()
    }

    fn atom(atom: &BasisAtom, tracks: &[Track], budget: &Budget) -> Result<Self, EngineError> {
        let (tracks, roles) = atom_layout(tracks);
        let bit = |s: u32, role: usize| s >> roles[role] & 1 == 1;
        // States: 0 = nothing seen below, higher values are atom-specific, SINK absorbs.
        let a = match atom {
            BasisAtom::Eq(..) => explore_tree(
                tracks,
                0u8,
                |&l, &r, s| match (l, r, bit(s, 0), bit(s, 1)) {
                    (0, 0, false, false) => 0,
                    (0, 0, true, true) => 1,
                    (1, 0, false, false) | (0, 1, false, false) => 1,
                    _ => SINK,
                },
                |&q| q == 1,
                budget,
            )?,
            BasisAtom::In(..) => explore_tree(
                tracks,
                0u8,
                |&l, &r, s| match (l, r, bit(s, 0), bit(s, 1)) {
                    (0, 0, false, _) => 0,
                    (0, 0, true, true) => 1,
                    (1, 0, false, _) | (0, 1, false, _) => 1,
                    _ => SINK,
                },
                |&q| q == 1,
                budget,
            )?,
            // 1 = y strictly below (x still missing), 2 = done
            BasisAtom::Lt(..) => explore_tree(
                tracks,
                0u8,
                |&l, &r, s| match (l, r, bit(s, 0), bit(s, 1)) {
                    (0, 0, false, false) => 0,
                    (0, 0, false, true) => 1,
                    (1, 0, false, false) | (0, 1, false, false) => 1,
                    (1, 0, true, false) | (0, 1, true, false) => 2,
                    (2, 0, false, false) | (0, 2, false, false) => 2,
                    _ => SINK,
                },
                |&q| q == 2,
                budget,
            )?,
            // 1 = y at this very node, 2 = done
            BasisAtom::Succ(dir @ (Step::Left | Step::Right), ..) => {
                let right = *dir == Step::Right;
                explore_tree(
                    tracks,
                    0u8,
                    move |&l, &r, s| match (l, r, bit(s, 0), bit(s, 1)) {
                        (0, 0, false, false) => 0,
                        (0, 0, false, true) => 1,
                        (1, 0, true, false) if !right => 2,
                        (0, 1, true, false) if right => 2,
                        (2, 0, false, false) | (0, 2, false, false) => 2,
                        _ => SINK,
                    },
                    |&q| q == 2,
                    budget,
                )?
            }
            BasisAtom::Root(_) => explore_tree(
                tracks,
                0u8,
                |&l, &r, s| match (l, r, bit(s, 0)) {
                    (0, 0, false) => 0,
                    (0, 0, true) => 1,
                    _ => SINK,
                },
                |&q| q == 1,
                budget,
            )?,
            BasisAtom::Succ(Step::Next, ..) | BasisAtom::Zero(_) => {
                return Err(EngineError::Unsupported(
                    "word atoms have no tree automaton",
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
        TreeAutomaton {
            tracks,
            frontier: 0,
            accepting: vec![false],
            delta: vec![0; k],
        }
    }

    fn product(&self, other: &Self, op: BoolOp, budget: &Budget) -> Result<Self, EngineError> {
        let union = merge_tracks(&self.tracks, &other.tracks);
        let lm = restriction_map(&union, &self.tracks);
        let rm = restriction_map(&union, &other.tracks);
        let a = explore_tree(
            union,
            (self.frontier, other.frontier),
            |&(p1, p2), &(q1, q2), s| {
                (
                    self.step(p1, q1, lm[s as usize]),
                    other.step(p2, q2, rm[s as usize]),
                )
            },
            |&(p, q)| match op {
                BoolOp::And => self.is_accepting(p) && other.is_accepting(q),
                BoolOp::Or => self.is_accepting(p) || other.is_accepting(q),
            },
            budget,
        )?;
        Ok(a.minimize())
    }

    fn complement(&self, budget: &Budget) -> Result<Self, EngineError> {
        let flipped = TreeAutomaton {
            tracks: self.tracks.clone(),
            frontier: self.frontier,
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
        // States reachable from padding once the projected track may be non-zero.
        let lone = 1u32 << j;
        let mut zone: BTreeSet<u32> = BTreeSet::from([self.frontier]);
        loop {
            let cur: Vec<u32> = zone.iter().copied().collect();
            let before = zone.len();
            for &a in &cur {
                for &b in &cur {
                    zone.insert(self.step(a, b, 0));
                    zone.insert(self.step(a, b, lone));
                }
            }
            if zone.len() == before {
                break;
            }
        }
        let mut tracks = self.tracks.clone();
        tracks.remove(j);
        let a = explore_tree(
            tracks,
            zone.into_iter().collect::<Vec<u32>>(),
            |l: &Vec<u32>, r: &Vec<u32>, s| {
                let (s0, s1) = (insert_bit(s, j, false), insert_bit(s, j, true));
                let mut next: Vec<u32> = Vec::with_capacity(l.len() * r.len() * 2);
                for &p in l {
                    for &q in r {
                        next.push(self.step(p, q, s0));
                        next.push(self.step(p, q, s1));
                    }
                }
                next.sort_unstable();
                next.dedup();
                next
            },
            |set| set.iter().any(|&q| self.is_accepting(q)),
            budget,
        )?;
        Ok(a.minimize())
    }
}
