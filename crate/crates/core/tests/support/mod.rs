//! Shared test helpers: a seeded formula generator whose quantifiers are guarded so
//! that bounded evaluation is exact, plus exhaustive valuation, word and tree
//! enumerators.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use recset::engine::{LabeledTree, Valuation};
use recset::logic::{parse_formula, Formula, Logic, Node};
use recset::oracle::Bounds;

/// Free variables a generated formula may mention.
pub const FREE_FO: [&str; 2] = ["x", "y"];
pub const FREE_SO: &str = "X";

/// Oracle bounds under which guarded formulas evaluate exactly: WS1S quantifiers are
/// guarded below 4 and sets below 3; WS2S quantifiers below depth 2 and sets inside
/// `{e,0,1}`.
pub fn exact_bounds(logic: Logic) -> Bounds {
    match logic {
        Logic::Ws1s => Bounds::new(12, 3),
        Logic::Ws2s => Bounds::new(4, 2),
    }
}

pub struct FormulaGen {
    logic: Logic,
    rng: StdRng,
    fresh: usize,
    free_so: bool,
}

impl FormulaGen {
    pub fn new(logic: Logic, seed: u64) -> Self {
        FormulaGen {
            logic,
            rng: StdRng::seed_from_u64(seed),
            fresh: 0,
            free_so: true,
        }
    }

    /// Restricts free variables to `x` and `y`, as rule bodies require.
    pub fn rule_bodies(mut self) -> Self {
        self.free_so = false;
        self
    }

    pub fn formula(&mut self, depth: usize) -> Formula {
        let text = self.text(depth);
        parse_formula(&text, self.logic).unwrap_or_else(|e| panic!("generated `{text}`: {e}"))
    }

    /// Surface text of a random formula with connective depth at most `depth`.
    pub fn text(&mut self, depth: usize) -> String {
        self.fresh = 0;
        let fo: Vec<String> = FREE_FO.iter().map(|s| s.to_string()).collect();
        let so: Vec<String> = if self.free_so {
            vec![FREE_SO.to_string()]
        } else {
            vec![]
        };
        self.go(depth, &fo, &so)
    }

    fn go(&mut self, depth: usize, fo: &[String], so: &[String]) -> String {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.atom(fo, so);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 => format!("~({})", self.go(d, fo, so)),
            1 | 2 => format!("({}) & ({})", self.go(d, fo, so), self.go(d, fo, so)),
            3 | 4 => format!("({}) | ({})", self.go(d, fo, so), self.go(d, fo, so)),
            5 => format!("({}) => ({})", self.go(d, fo, so), self.go(d, fo, so)),
            6 => format!("({}) <=> ({})", self.go(d, fo, so), self.go(d, fo, so)),
            7 | 8 => {
                let z = self.name("z");
                let guard = self.first_order_guard(&z);
                let mut inner = fo.to_vec();
                inner.push(z.clone());
                let body = self.go(d, &inner, so);
                if self.rng.gen_bool(0.5) {
                    format!("(ex1 {z}: {guard} & ({body}))")
                } else {
                    format!("(all1 {z}: {guard} => ({body}))")
                }
            }
            _ => {
                let big = self.name("Z");
                let w = self.name("w");
                let guard = self.second_order_guard(&big, &w);
                let mut inner = so.to_vec();
                inner.push(big.clone());
                let body = self.go(d, fo, &inner);
                if self.rng.gen_bool(0.5) {
                    format!("(ex2 {big}: {guard} & ({body}))")
                } else {
                    format!("(all2 {big}: {guard} => ({body}))")
                }
            }
        }
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn first_order_guard(&mut self, z: &str) -> String {
        match self.logic {
            Logic::Ws1s => format!("{z} < {}", self.rng.gen_range(1..=3)),
            Logic::Ws2s => {
                let c = self.node_literal(2);
                if self.rng.gen_bool(0.5) {
                    format!("{z} <= {c}")
                } else {
                    format!("{z} < {c}")
                }
            }
        }
    }

    fn second_order_guard(&mut self, big: &str, w: &str) -> String {
        match self.logic {
            Logic::Ws1s => format!(
                "(all1 {w}: ({w} in {big} => {w} < {}))",
                self.rng.gen_range(1..=3)
            ),
            Logic::Ws2s => format!("(all1 {w}: ({w} in {big} => {w} < 00 | {w} = 1))"),
        }
    }

    fn node_literal(&mut self, max_len: usize) -> String {
        let len = self.rng.gen_range(0..=max_len);
        if len == 0 {
            return "epsilon".to_string();
        }
        (0..len)
            .map(|_| if self.rng.gen_bool(0.5) { '1' } else { '0' })
            .collect()
    }

    fn term(&mut self, fo: &[String]) -> String {
        let v = &fo[self.rng.gen_range(0..fo.len())];
        match (self.logic, self.rng.gen_range(0..6)) {
            (Logic::Ws1s, 0) => self.rng.gen_range(0..=3).to_string(),
            (Logic::Ws1s, 1) => format!("{v} + {}", self.rng.gen_range(1..=2)),
            (Logic::Ws2s, 0) => self.node_literal(2),
            (Logic::Ws2s, 1) => {
                let len = self.rng.gen_range(1..=2);
                let w: String = (0..len)
                    .map(|_| if self.rng.gen_bool(0.5) { '1' } else { '0' })
                    .collect();
                format!("{v}.{w}")
            }
            _ => v.clone(),
        }
    }

    fn atom(&mut self, fo: &[String], so: &[String]) -> String {
        let k = self.rng.gen_range(0..20);
        if k == 0 {
            return if self.rng.gen_bool(0.5) {
                "true"
            } else {
                "false"
            }
            .to_string();
        }
        let a = self.term(fo);
        match k {
            1..=5 if !so.is_empty() => format!("{a} in {}", so[self.rng.gen_range(0..so.len())]),
            1..=7 => format!("{a} = {}", self.term(fo)),
            8..=14 => format!("{a} < {}", self.term(fo)),
            _ => format!("{a} <= {}", self.term(fo)),
        }
    }
}

/// Every valuation of `x`, `y` and `X` over the given positions. Variables absent
/// from `f` stay at the first position (or the empty set).
pub fn valuations<P: Ord + Copy>(f: &Formula, positions: &[P]) -> Vec<Valuation<P>> {
    let fv = f.free_vars();
    let xs: Vec<P> = if fv.first.contains("x") {
        positions.to_vec()
    } else {
        vec![positions[0]]
    };
    let ys: Vec<P> = if fv.first.contains("y") {
        positions.to_vec()
    } else {
        vec![positions[0]]
    };
    let sets: Vec<BTreeSet<P>> = if fv.second.contains(FREE_SO) {
        subsets(positions)
    } else {
        vec![BTreeSet::new()]
    };
    let mut out = vec![];
    for &x in &xs {
        for &y in &ys {
            for s in &sets {
                out.push(
                    Valuation::new()
                        .with_first("x", x)
                        .with_first("y", y)
                        .with_set(FREE_SO, s.iter().copied()),
                );
            }
        }
    }
    out
}

pub fn subsets<P: Ord + Copy>(positions: &[P]) -> Vec<BTreeSet<P>> {
    (0u32..1 << positions.len())
        .map(|m| {
            positions
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, &p)| p)
                .collect()
        })
        .collect()
}

/// Positions used for exhaustive valuations: naturals below 6, tree nodes of length at most 2.
pub fn word_positions() -> Vec<u32> {
    (0..6).collect()
}

pub fn tree_positions() -> Vec<Node> {
    Node::all_below(3)
}

/// All words of length `<= max_len` over `2^tracks` symbols.
pub fn all_words(tracks: usize, max_len: usize) -> Vec<Vec<u32>> {
    let k = 1u32 << tracks;
    let mut out = vec![vec![]];
    let mut layer: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                (0..k).map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// All binary-complete labelled trees with at most `levels` levels over `2^tracks`
/// symbols, the empty tree included.
pub fn all_trees(tracks: usize, levels: usize) -> Vec<LabeledTree> {
    fn shapes(at: Node, levels: usize) -> Vec<Vec<Node>> {
        let mut out = vec![vec![]];
        if levels == 0 {
            return out;
        }
        out.push(vec![at]);
        if levels > 1 {
            let left = shapes(at.child(false), levels - 1);
            let right = shapes(at.child(true), levels - 1);
            for l in left.iter().filter(|l| !l.is_empty()) {
                for r in right.iter().filter(|r| !r.is_empty()) {
                    let mut s = vec![at];
                    s.extend(l);
                    s.extend(r);
                    out.push(s);
                }
            }
        }
        out
    }
    let k = 1u32 << tracks;
    let mut out = vec![];
    for shape in shapes(Node::ROOT, levels) {
        let n = shape.len() as u32;
        for code in 0..k.pow(n) {
            let mut t = LabeledTree::default();
            let mut c = code;
            for &node in &shape {
                t.labels.insert(node, c % k);
                c /= k;
            }
            out.push(t);
        }
    }
    out
}
