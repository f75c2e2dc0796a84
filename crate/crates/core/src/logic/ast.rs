use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

/// Which weak monadic theory a formula lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Logic {
    /// One successor: positions are naturals.
    Ws1s,
    /// Two successors: positions are nodes of the infinite binary tree.
    Ws2s,
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logic::Ws1s => "ws1s",
            Logic::Ws2s => "ws2s",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    First,
    Second,
}

/// A variable. Lower-case names are first-order, upper-case names second-order;
/// the order is stored explicitly so that generated names need not follow the case rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: String,
    pub order: Order,
}

impl Var {
    pub fn first(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            order: Order::First,
        }
    }

    pub fn second(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            order: Order::Second,
        }
    }

    /// Builds a variable whose order follows the case of its first letter.
    pub fn from_case(name: impl Into<String>) -> Self {
        let name = name.into();
        let order = if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            Order::Second
        } else {
            Order::First
        };
        Var { name, order }
    }

    pub fn is_first_order(&self) -> bool {
        self.order == Order::First
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A node of the infinite binary tree, i.e. a bit string over {0,1}.
/// Bit `i` of `bits` is the `i`-th step from the root (0 = left, 1 = right).
///
/// Ordering is length-lexicographic.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Node {
    len: u8,
    bits: u64,
}

impl Node {
    pub const MAX_DEPTH: usize = 64;

    pub const ROOT: Node = Node { len: 0, bits: 0 };

    pub fn from_bits(bits: &[bool]) -> Self {
        assert!(bits.len() <= Self::MAX_DEPTH, "tree position too deep");
        let mut n = Node::ROOT;
        for &b in bits {
            n = n.child(b);
        }
        n
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        self.bits >> i & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.bit(i))
    }

    pub fn child(&self, right: bool) -> Node {
        assert!(self.len() < Self::MAX_DEPTH, "tree position too deep");
        Node {
            len: self.len + 1,
            bits: self.bits | (right as u64) << self.len,
        }
    }

    pub fn parent(&self) -> Option<Node> {
        if self.len == 0 {
            return None;
        }
        let len = self.len - 1;
        Some(Node {
            len,
            bits: self.bits & ((1u64 << len) - 1),
        })
    }

    /// The last step taken from the parent, if any.
    pub fn last(&self) -> Option<bool> {
        (self.len > 0).then(|| self.bit(self.len() - 1))
    }

    pub fn concat(&self, suffix: &Node) -> Node {
        let mut n = *self;
        for b in suffix.bits() {
            n = n.child(b);
        }
        n
    }

    pub fn is_prefix_of(&self, other: &Node) -> bool {
        if self.len > other.len {
            return false;
        }
        let mask = if self.len == 64 {
            u64::MAX
        } else {
            (1u64 << self.len) - 1
        };
        other.bits & mask == self.bits
    }

    pub fn is_proper_prefix_of(&self, other: &Node) -> bool {
        self.len < other.len && self.is_prefix_of(other)
    }

    /// All nodes of length strictly below `levels`, in length-lexicographic order.
    pub fn all_below(levels: usize) -> Vec<Node> {
        let mut out = vec![];
        if levels == 0 {
            return out;
        }
        let mut layer = vec![Node::ROOT];
        for _ in 0..levels {
            out.extend(layer.iter().copied());
            layer = layer
                .iter()
                .flat_map(|n| [n.child(false), n.child(true)])
                .collect();
        }
        out
    }

    /// Bit string rendering with `e` for the root.
    pub fn to_literal(&self) -> String {
        if self.is_root() {
            "e".to_string()
        } else {
            self.bits().map(|b| if b { '1' } else { '0' }).collect()
        }
    }

    /// Parses `e`/`epsilon` or a non-empty bit string.
    pub fn parse_literal(s: &str) -> Option<Node> {
        match s {
            "e" | "epsilon" | "ε" => Some(Node::ROOT),
            _ if !s.is_empty()
                && s.len() <= Self::MAX_DEPTH
                && s.bytes().all(|c| c == b'0' || c == b'1') =>
            {
                Some(Node::from_bits(
                    &s.bytes().map(|c| c == b'1').collect::<Vec<_>>(),
                ))
            }
            _ => None,
        }
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            // lexicographic on the bit sequence: compare the reversed low bits
            let a = self.bits.reverse_bits();
            let b = other.bits.reverse_bits();
            a.cmp(&b)
        })
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Node({})", self.to_literal())
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermBase {
    Var(Var),
    /// The constant 0 of WS1S.
    Zero,
    /// The root constant of WS2S.
    Epsilon,
}

/// The successor suffix of a term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermPath {
    /// `base + n`
    Offset(u32),
    /// `base.w`
    Bits(Node),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub base: TermBase,
    pub path: TermPath,
}

impl Term {
    pub fn var(v: Var) -> Self {
        Term {
            base: TermBase::Var(v),
            path: TermPath::Offset(0),
        }
    }

    /// A bare variable in a WS2S context.
    pub fn node_var(v: Var) -> Self {
        Term {
            base: TermBase::Var(v),
            path: TermPath::Bits(Node::ROOT),
        }
    }

    pub fn numeral(n: u32) -> Self {
        Term {
            base: TermBase::Zero,
            path: TermPath::Offset(n),
        }
    }

    pub fn node(n: Node) -> Self {
        Term {
            base: TermBase::Epsilon,
            path: TermPath::Bits(n),
        }
    }

    pub fn plus(v: Var, n: u32) -> Self {
        Term {
            base: TermBase::Var(v),
            path: TermPath::Offset(n),
        }
    }

    pub fn dot(v: Var, w: Node) -> Self {
        Term {
            base: TermBase::Var(v),
            path: TermPath::Bits(w),
        }
    }

    /// The variable if this term is a bare variable with an empty path.
    pub fn as_var(&self) -> Option<&Var> {
        match (&self.base, &self.path) {
            (TermBase::Var(v), TermPath::Offset(0)) => Some(v),
            (TermBase::Var(v), TermPath::Bits(w)) if w.is_root() => Some(v),
            _ => None,
        }
    }

    pub fn logic(&self) -> Option<Logic> {
        match (&self.base, &self.path) {
            (TermBase::Zero, _) | (_, TermPath::Offset(1..)) => Some(Logic::Ws1s),
            (TermBase::Epsilon, _) => Some(Logic::Ws2s),
            (_, TermPath::Bits(w)) if !w.is_root() => Some(Logic::Ws2s),
            _ => None,
        }
    }
}

/// Successor atoms of the automaton basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    /// `+1` in WS1S.
    Next,
    /// `.0` in WS2S.
    Left,
    /// `.1` in WS2S.
    Right,
}

/// Atoms over bare variables that the automata engines compile directly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BasisAtom {
    /// `y = x + 1`, `y = x.0` or `y = x.1` depending on the step.
    Succ(Step, Var, Var),
    Eq(Var, Var),
    /// `<` on naturals, proper prefix on tree nodes.
    Lt(Var, Var),
    In(Var, Var),
    /// `x = 0`
    Zero(Var),
    /// `x = epsilon`
    Root(Var),
}

impl BasisAtom {
    pub fn vars(&self) -> Vec<&Var> {
        match self {
            BasisAtom::Succ(_, a, b)
            | BasisAtom::Eq(a, b)
            | BasisAtom::Lt(a, b)
            | BasisAtom::In(a, b) => {
                vec![a, b]
            }
            BasisAtom::Zero(a) | BasisAtom::Root(a) => vec![a],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Lt(Term, Term),
    Leq(Term, Term),
    In(Term, Var),
    Basis(BasisAtom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// First- or second-order existential, depending on the variable's order.
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn exists(v: Var, f: Formula) -> Formula {
        Formula::Exists(v, Box::new(f))
    }

    pub fn forall(v: Var, f: Formula) -> Formula {
        Formula::Forall(v, Box::new(f))
    }

    pub fn basis(a: BasisAtom) -> Formula {
        Formula::Basis(a)
    }

    /// Conjunction of a non-empty list, folded to the left.
    pub fn conj(fs: impl IntoIterator<Item = Formula>) -> Formula {
        fs.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    pub fn free_vars(&self) -> FreeVars {
        let mut fv = FreeVars::default();
        let mut bound = vec![];
        collect_free(self, &mut bound, &mut fv);
        fv
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => 1 + a.size(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }
}

/// Free first- and second-order variables of a formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub first: BTreeSet<String>,
    pub second: BTreeSet<String>,
}

impl FreeVars {
    pub fn is_empty(&self) -> bool {
        self.first.is_empty() && self.second.is_empty()
    }

    pub fn contains(&self, v: &Var) -> bool {
        match v.order {
            Order::First => self.first.contains(&v.name),
            Order::Second => self.second.contains(&v.name),
        }
    }

    fn insert(&mut self, v: &Var) {
        match v.order {
            Order::First => self.first.insert(v.name.clone()),
            Order::Second => self.second.insert(v.name.clone()),
        };
    }
}

fn note(v: &Var, bound: &[&Var], fv: &mut FreeVars) {
    if !bound.contains(&v) {
        fv.insert(v);
    }
}

fn note_term(t: &Term, bound: &[&Var], fv: &mut FreeVars) {
    if let TermBase::Var(v) = &t.base {
        note(v, bound, fv);
    }
}

fn collect_free<'a>(f: &'a Formula, bound: &mut Vec<&'a Var>, fv: &mut FreeVars) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Eq(a, b) | Formula::Lt(a, b) | Formula::Leq(a, b) => {
            note_term(a, bound, fv);
            note_term(b, bound, fv);
        }
        Formula::In(t, s) => {
            note_term(t, bound, fv);
            note(s, bound, fv);
        }
        Formula::Basis(a) => {
            for v in a.vars() {
                note(v, bound, fv);
            }
        }
        Formula::Not(a) => collect_free(a, bound, fv),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            collect_free(a, bound, fv);
            collect_free(b, bound, fv);
        }
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            bound.push(v);
            collect_free(body, bound, fv);
            bound.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_order_is_length_lex() {
        let mut v: Vec<Node> = ["1", "e", "01", "00", "0", "10"]
            .iter()
            .map(|s| Node::parse_literal(s).unwrap())
            .collect();
        v.sort();
        let lits: Vec<_> = v.iter().map(Node::to_literal).collect();
        assert_eq!(lits, ["e", "0", "1", "00", "01", "10"]);
    }

    #[test]
    fn proper_prefix() {
        let p = |s| Node::parse_literal(s).unwrap();
        assert!(p("01").is_proper_prefix_of(&p("0110")));
        assert!(!p("00").is_proper_prefix_of(&p("0110")));
        assert!(!p("0110").is_proper_prefix_of(&p("0110")));
        assert!(p("e").is_proper_prefix_of(&p("1")));
    }

    #[test]
    fn parent_and_last() {
        let n = Node::parse_literal("011").unwrap();
        assert_eq!(n.parent().unwrap().to_literal(), "01");
        assert_eq!(n.last(), Some(true));
        assert_eq!(Node::ROOT.parent(), None);
        assert_eq!(Node::all_below(3).len(), 7);
    }

    #[test]
    fn free_vars_respect_binding() {
        let x = Var::first("x");
        let xs = Var::second("X");
        let f = Formula::and(
            Formula::In(Term::var(x.clone()), xs.clone()),
            Formula::exists(
                x.clone(),
                Formula::Eq(Term::var(x.clone()), Term::var(Var::first("y"))),
            ),
        );
        let fv = f.free_vars();
        assert_eq!(fv.first.iter().collect::<Vec<_>>(), ["x", "y"]);
        assert_eq!(fv.second.iter().collect::<Vec<_>>(), ["X"]);
    }
}
