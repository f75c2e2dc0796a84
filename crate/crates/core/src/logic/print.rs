use super::ast::{BasisAtom, Formula, Step, Term, TermBase, TermPath, Var};

/// Renders a formula in the surface syntax accepted by [`parse_formula`](super::parse_formula).
///
/// Only the parentheses needed to preserve the tree shape are emitted, so
/// `parse_formula(&pretty_print(f), logic) == f` for every parsed `f`.
pub fn pretty_print(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, 0, &mut out);
    out
}

const IFF: u8 = 1;
const IMP: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const UNARY: u8 = 5;

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Exists(..) | Formula::Forall(..) => 0,
        Formula::Iff(..) => IFF,
        Formula::Implies(..) => IMP,
        Formula::Or(..) => OR,
        Formula::And(..) => AND,
        _ => UNARY,
    }
}

fn write_formula(f: &Formula, min: u8, out: &mut String) {
    // Quantifiers bind to the right as far as possible; parenthesize them whenever
    // they are not in a body or at the top.
    let wrap = prec(f) < min;
    if wrap {
        out.push('(');
    }
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Eq(a, b) => binary_terms(a, "=", b, out),
        Formula::Lt(a, b) => binary_terms(a, "<", b, out),
        Formula::Leq(a, b) => binary_terms(a, "<=", b, out),
        Formula::In(t, s) => {
            out.push_str(&print_term(t));
            out.push_str(" in ");
            out.push_str(&s.name);
        }
        Formula::Basis(a) => out.push_str(&print_basis(a)),
        Formula::Not(a) => {
            out.push('~');
            write_formula(a, UNARY, out);
        }
        Formula::And(a, b) => binary(a, " & ", b, AND, out),
        Formula::Or(a, b) => binary(a, " | ", b, OR, out),
        Formula::Implies(a, b) => binary(a, " => ", b, IMP, out),
        Formula::Iff(a, b) => binary(a, " <=> ", b, IFF, out),
        Formula::Exists(v, body) => {
            quant(if v.is_first_order() { "ex1" } else { "ex2" }, v, body, out)
        }
        Formula::Forall(v, body) => quant(
            if v.is_first_order() { "all1" } else { "all2" },
            v,
            body,
            out,
        ),
    }
    if wrap {
        out.push(')');
    }
}

fn binary(a: &Formula, op: &str, b: &Formula, p: u8, out: &mut String) {
    // Left-associative: the left operand may share the operator, the right may not.
    write_formula(a, p.max(1), out);
    out.push_str(op);
    write_formula(b, p + 1, out);
}

fn binary_terms(a: &Term, op: &str, b: &Term, out: &mut String) {
    out.push_str(&print_term(a));
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    out.push_str(&print_term(b));
}

fn quant(kw: &str, v: &Var, body: &Formula, out: &mut String) {
    out.push_str(kw);
    out.push(' ');
    out.push_str(&v.name);
    out.push_str(": ");
    write_formula(body, 0, out);
}

pub(crate) fn print_term(t: &Term) -> String {
    match (&t.base, &t.path) {
        (TermBase::Var(v), TermPath::Offset(0)) => v.name.clone(),
        (TermBase::Var(v), TermPath::Offset(n)) => format!("{} + {n}", v.name),
        (TermBase::Zero, TermPath::Offset(n)) => n.to_string(),
        (TermBase::Var(v), TermPath::Bits(w)) if w.is_root() => v.name.clone(),
        (TermBase::Var(v), TermPath::Bits(w)) => format!("{}.{}", v.name, w.to_literal()),
        (TermBase::Epsilon, TermPath::Bits(w)) if w.is_root() => "epsilon".to_string(),
        (TermBase::Epsilon, TermPath::Bits(w)) => w.to_literal(),
        // Mixed constructions cannot come out of the parser; print something readable.
        (TermBase::Zero, TermPath::Bits(w)) => format!("0.{}", w.to_literal()),
        (TermBase::Epsilon, TermPath::Offset(n)) => format!("epsilon + {n}"),
    }
}

fn print_basis(a: &BasisAtom) -> String {
    match a {
        BasisAtom::Succ(Step::Next, x, y) => format!("{y} = {x} + 1"),
        BasisAtom::Succ(Step::Left, x, y) => format!("{y} = {x}.0"),
        BasisAtom::Succ(Step::Right, x, y) => format!("{y} = {x}.1"),
        BasisAtom::Eq(x, y) => format!("{x} = {y}"),
        BasisAtom::Lt(x, y) => format!("{x} < {y}"),
        BasisAtom::In(x, s) => format!("{x} in {s}"),
        BasisAtom::Zero(x) => format!("{x} = 0"),
        BasisAtom::Root(x) => format!("{x} = epsilon"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Logic};

    fn round_trip(text: &str, logic: Logic) {
        let f = parse_formula(text, logic).unwrap();
        let printed = pretty_print(&f);
        assert_eq!(
            parse_formula(&printed, logic).unwrap(),
            f,
            "{text} printed as {printed}"
        );
    }

    #[test]
    fn round_trips() {
        round_trip(
            "(3 < x & x < 10 & y < x) | (x < 3 & y = x + 1)",
            Logic::Ws1s,
        );
        round_trip("x = x", Logic::Ws1s);
        round_trip("ex2 X: x in X & all1 z: (z in X => z+1 in X)", Logic::Ws1s);
        round_trip("(ex1 z: x < 0000 & x = z.0 & y = z.1) | (ex1 z: z.01 <= x & y = z.11) | (x = 11 & y = 000)", Logic::Ws2s);
        round_trip("~(x = y) & ~~x < y", Logic::Ws1s);
        round_trip("(a = a => b = b) => c = c", Logic::Ws1s);
        round_trip("a = a => (b = b => c = c)", Logic::Ws1s);
        round_trip("(ex1 z: z = x) & y = y", Logic::Ws1s);
        round_trip("~(all1 z: z = x) <=> true | false", Logic::Ws1s);
    }

    #[test]
    fn minimal_parentheses() {
        let f = parse_formula("((x = y) & (y < x)) | x in X", Logic::Ws1s).unwrap();
        assert_eq!(pretty_print(&f), "x = y & y < x | x in X");
    }
}
