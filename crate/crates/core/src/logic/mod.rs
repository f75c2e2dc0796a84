//! Syntax of weak monadic second-order formulas over one or two successors,
//! the rule format, and the normal form consumed by the automata engines.

mod ast;
mod normalize;
mod parse;
mod print;
mod rule;

pub use ast::{
    BasisAtom, Formula, FreeVars, Logic, Node, Order, Step, Term, TermBase, TermPath, Var,
};
pub use normalize::{is_normal, normalize};
pub use parse::{parse_formula, parse_rule, parse_rule_with};
pub use print::pretty_print;
pub use rule::Rule;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: not valid under {logic}: {message}")]
    WrongLogic {
        line: usize,
        col: usize,
        logic: Logic,
        message: String,
    },
    #[error("missing `logic: ws1s|ws2s` declaration")]
    MissingLogic,
    #[error("rule body has free variables other than x and y: {}", names.join(", "))]
    ExtraFreeVariables { names: Vec<String> },
    #[error("term `{term}` does not belong to {logic}")]
    TermLogic { term: String, logic: Logic },
}
