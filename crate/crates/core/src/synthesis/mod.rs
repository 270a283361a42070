//! Find-algorithm synthesis: per-loop template decisions driven by an
//! embedded decision procedure for linear integer arithmetic with
//! uninterpreted functions.

pub mod simplex;
pub mod smtlib;
pub mod solver;

pub use solver::{solve, Clause, Formula, SmtQuery, SolveResult, SolverConfig};
