//! Integer set and relation algebra over affine constraints extended with
//! uninterpreted function terms, plus projection-based scanning and a
//! brute-force enumeration oracle.

pub mod enumerate;
pub mod expr;
pub mod ops;
pub mod scan;
pub mod set;
pub mod text;

pub use enumerate::{enumerate, Box_, UfTable, UfTables};
pub use expr::{AffineExpr, AffineTerm, Atom, Constraint, Rel, UfApp, UfSymbol, VarId, VarKind};
pub use ops::{compose, intersect, inverse, range_keep, substitute_tuple_vars};
pub use scan::{project_scan, Bound, FindCondition, ScanLevel, ScanPlan};
pub use set::{Conjunct, PresburgerRelation, PresburgerSet};
pub use text::{parse_relation, parse_relation_with, parse_set, parse_set_with};
