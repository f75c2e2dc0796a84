//! Decides termination of monadic loop rules `x -> psi(x,y), y` over one or two
//! successors by compiling recurrence-set formulas to finite word and tree automata.

pub mod analyzer;
pub mod engine;
pub mod logic;
pub mod oracle;
