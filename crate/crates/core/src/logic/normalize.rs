use super::ast::{BasisAtom, Formula, Node, Step, Term, TermBase, TermPath, Var};

/// Prefix of variables introduced by [`normalize`]. The parser rejects it in user input.
pub(crate) const FRESH_PREFIX: &str = "_t";

/// Rewrites `f` into the basis fragment: basis atoms over bare variables, `~`, `&`, `|`
/// and existential quantifiers.
///
/// Universals become `~ex ~`, `=>`, `<=>` and `<=` are expanded, and compound terms
/// (`x + n`, `x.w`, numerals, bit-string constants) are replaced by chains of fresh
/// existentially quantified variables linked by successor atoms and anchored by
/// `Zero`/`Root` for constants. The chains nest one variable per quantifier so every
/// scope stays narrow.
pub fn normalize(f: &Formula) -> Formula {
    let mut n = Normalizer {
        next: first_free_index(f),
    };
    n.formula(f)
}

/// True iff `f` is in the fragment produced by [`normalize`].
pub fn is_normal(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Basis(_) => true,
        Formula::Not(a) | Formula::Exists(_, a) => is_normal(a),
        Formula::And(a, b) | Formula::Or(a, b) => is_normal(a) && is_normal(b),
        _ => false,
    }
}

struct Normalizer {
    next: usize,
}

impl Normalizer {
    fn fresh(&mut self) -> Var {
        let v = Var::first(format!("{FRESH_PREFIX}{}", self.next));
        self.next += 1;
        v
    }

    fn formula(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Basis(a) => Formula::Basis(a.clone()),
            Formula::Eq(a, b) => self.equality(a, b),
            Formula::Lt(a, b) => self.binary_atom(a, b, BasisAtom::Lt),
            Formula::Leq(a, b) => {
                let lt = self.binary_atom(a, b, BasisAtom::Lt);
                let eq = self.equality(a, b);
                Formula::or(lt, eq)
            }
            Formula::In(t, set) => match t.as_var() {
                Some(v) => Formula::basis(BasisAtom::In(v.clone(), set.clone())),
                None => {
                    let u = self.fresh();
                    let def = self.define(t, &u);
                    Formula::exists(
                        u.clone(),
                        Formula::and(def, Formula::basis(BasisAtom::In(u, set.clone()))),
                    )
                }
            },
            Formula::Not(a) => Formula::not(self.formula(a)),
            Formula::And(a, b) => Formula::and(self.formula(a), self.formula(b)),
            Formula::Or(a, b) => Formula::or(self.formula(a), self.formula(b)),
            Formula::Implies(a, b) => Formula::or(Formula::not(self.formula(a)), self.formula(b)),
            Formula::Iff(a, b) => {
                let (na, nb) = (self.formula(a), self.formula(b));
                Formula::and(
                    Formula::or(Formula::not(na.clone()), nb.clone()),
                    Formula::or(Formula::not(nb), na),
                )
            }
            Formula::Exists(v, body) => Formula::exists(v.clone(), self.formula(body)),
            Formula::Forall(v, body) => {
                Formula::not(Formula::exists(v.clone(), Formula::not(self.formula(body))))
            }
        }
    }

    fn equality(&mut self, a: &Term, b: &Term) -> Formula {
        match (a.as_var(), b.as_var()) {
            (Some(x), Some(y)) => Formula::basis(BasisAtom::Eq(x.clone(), y.clone())),
            (Some(x), None) => self.define(b, x),
            (None, Some(y)) => self.define(a, y),
            (None, None) => {
                let u = self.fresh();
                let da = self.define(a, &u);
                let db = self.define(b, &u);
                Formula::exists(u, Formula::and(da, db))
            }
        }
    }

    fn binary_atom(&mut self, a: &Term, b: &Term, atom: fn(Var, Var) -> BasisAtom) -> Formula {
        let mut defs = vec![];
        let mut bound = vec![];
        let mut anchor = |n: &mut Self, t: &Term| match t.as_var() {
            Some(v) => v.clone(),
            None => {
                let u = n.fresh();
                defs.push(n.define(t, &u));
                bound.push(u.clone());
                u
            }
        };
        let x = anchor(self, a);
        let y = anchor(self, b);
        let mut f = Formula::basis(atom(x, y));
        for d in defs.into_iter().rev() {
            f = Formula::and(d, f);
        }
        for u in bound.into_iter().rev() {
            f = Formula::exists(u, f);
        }
        f
    }

    /// A formula stating `v = t`.
    fn define(&mut self, t: &Term, v: &Var) -> Formula {
        if let Some(x) = t.as_var() {
            return Formula::basis(BasisAtom::Eq(x.clone(), v.clone()));
        }
        let (prev, step) = match (&t.base, &t.path) {
            (TermBase::Zero, TermPath::Offset(0)) => {
                return Formula::basis(BasisAtom::Zero(v.clone()))
            }
            (TermBase::Epsilon, TermPath::Bits(w)) if w.is_root() => {
                return Formula::basis(BasisAtom::Root(v.clone()))
            }
            (base, TermPath::Offset(n)) => (
                Term {
                    base: base.clone(),
                    path: TermPath::Offset(n - 1),
                },
                Step::Next,
            ),
            (base, TermPath::Bits(w)) => {
                let parent = w.parent().unwrap_or(Node::ROOT);
                let step = if w.last() == Some(true) {
                    Step::Right
                } else {
                    Step::Left
                };
                (
                    Term {
                        base: base.clone(),
                        path: TermPath::Bits(parent),
                    },
                    step,
                )
            }
        };
        match prev.as_var() {
            Some(x) => Formula::basis(BasisAtom::Succ(step, x.clone(), v.clone())),
            None => {
                let u = self.fresh();
                let inner = self.define(&prev, &u);
                Formula::exists(
                    u.clone(),
                    Formula::and(Formula::basis(BasisAtom::Succ(step, u, v.clone())), inner),
                )
            }
        }
    }
}

/// Smallest index `i` such that no variable `_t{j}` with `j >= i` occurs in `f`.
fn first_free_index(f: &Formula) -> usize {
    fn scan(name: &str, max: &mut usize) {
        if let Some(i) = name
            .strip_prefix(FRESH_PREFIX)
            .and_then(|s| s.parse::<usize>().ok())
        {
            *max = (*max).max(i + 1);
        }
    }
    fn term(t: &Term, max: &mut usize) {
        if let TermBase::Var(v) = &t.base {
            scan(&v.name, max);
        }
    }
    fn go(f: &Formula, max: &mut usize) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) | Formula::Lt(a, b) | Formula::Leq(a, b) => {
                term(a, max);
                term(b, max);
            }
            Formula::In(t, s) => {
                term(t, max);
                scan(&s.name, max);
            }
            Formula::Basis(a) => a.vars().into_iter().for_each(|v| scan(&v.name, max)),
            Formula::Not(a) => go(a, max),
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                scan(&v.name, max);
                go(a, max);
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                go(a, max);
                go(b, max);
            }
        }
    }
    let mut max = 0;
    go(f, &mut max);
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, pretty_print, Logic};

    fn norm(text: &str, logic: Logic) -> Formula {
        normalize(&parse_formula(text, logic).unwrap())
    }

    #[test]
    fn successor_is_a_single_atom() {
        assert_eq!(
            norm("y = x + 1", Logic::Ws1s),
            Formula::basis(BasisAtom::Succ(
                Step::Next,
                Var::first("x"),
                Var::first("y")
            ))
        );
    }

    #[test]
    fn numeral_chain() {
        let f = norm("x < 3", Logic::Ws1s);
        assert!(is_normal(&f));
        assert_eq!(
            pretty_print(&f),
            "ex1 _t0: (ex1 _t1: _t0 = _t1 + 1 & (ex1 _t2: _t1 = _t2 + 1 & (ex1 _t3: _t2 = _t3 + 1 & _t3 = 0))) & x < _t0"
        );
    }

    #[test]
    fn tree_path_chain() {
        let f = norm("x < 0.000", Logic::Ws2s);
        assert!(is_normal(&f));
        let printed = pretty_print(&f);
        assert!(printed.contains("= epsilon"), "{printed}");
        assert_eq!(printed.matches(".0").count(), 4, "{printed}");
        assert!(!printed.contains(".1"));
    }

    #[test]
    fn eliminates_sugar() {
        let f = norm(
            "all1 z: (z <= x => z in X) <=> ~(ex2 Y: x in Y)",
            Logic::Ws1s,
        );
        assert!(is_normal(&f));
    }

    #[test]
    fn fresh_names_skip_existing() {
        let once = norm("x < 2", Logic::Ws1s);
        let twice = normalize(&Formula::and(
            once.clone(),
            parse_formula("y = 1", Logic::Ws1s).unwrap(),
        ));
        let fv = twice.free_vars();
        assert_eq!(fv.first.iter().collect::<Vec<_>>(), ["x", "y"]);
        assert!(pretty_print(&twice).contains("_t2"));
    }
}
