use super::ast::{BasisAtom, Formula, Logic, Step, Term};
use super::print::print_term;
use super::LogicError;

/// A monadic rule `x -> psi(x,y), y`: from position `x` the loop may move to any
/// `y` with `psi(x,y)`, and stops when no such `y` exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub logic: Logic,
    pub body: Formula,
}

impl Rule {
    /// The source variable of the rule body.
    pub const SOURCE: &'static str = "x";
    /// The target variable of the rule body.
    pub const TARGET: &'static str = "y";

    /// Checks that `body` only has first-order `x` and `y` free and that every term
    /// belongs to `logic`.
    pub fn new(name: impl Into<String>, logic: Logic, body: Formula) -> Result<Rule, LogicError> {
        let fv = body.free_vars();
        let mut extra: Vec<String> = fv
            .first
            .iter()
            .filter(|n| *n != Self::SOURCE && *n != Self::TARGET)
            .cloned()
            .collect();
        extra.extend(fv.second.iter().cloned());
        if !extra.is_empty() {
            return Err(LogicError::ExtraFreeVariables { names: extra });
        }
        check_terms(&body, logic)?;
        Ok(Rule {
            name: name.into(),
            logic,
            body,
        })
    }
}

fn check_term(t: &Term, logic: Logic) -> Result<(), LogicError> {
    match t.logic() {
        Some(l) if l != logic => Err(LogicError::TermLogic {
            term: print_term(t),
            logic,
        }),
        _ => Ok(()),
    }
}

pub(crate) fn check_terms(f: &Formula, logic: Logic) -> Result<(), LogicError> {
    match f {
        Formula::Eq(a, b) | Formula::Lt(a, b) | Formula::Leq(a, b) => {
            check_term(a, logic)?;
            check_term(b, logic)
        }
        Formula::In(t, _) => check_term(t, logic),
        Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => check_terms(a, logic),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            check_terms(a, logic)?;
            check_terms(b, logic)
        }
        Formula::Basis(a) => {
            let needs = match a {
                BasisAtom::Succ(Step::Next, ..) | BasisAtom::Zero(_) => Some(Logic::Ws1s),
                BasisAtom::Succ(..) | BasisAtom::Root(_) => Some(Logic::Ws2s),
                _ => None,
            };
            match needs {
                Some(l) if l != logic => Err(LogicError::TermLogic {
                    term: super::print::pretty_print(f),
                    logic,
                }),
                _ => Ok(()),
            }
        }
        Formula::True | Formula::False => Ok(()),
    }
}
