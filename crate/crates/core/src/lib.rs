//! spf-core: a code generator for sparse tensor contractions.
//!
//! The pipeline takes a contraction in tensor index notation plus per-tensor
//! sparse layout specifications, combines layout relations with the access
//! maps of the computation into one extended iteration space, analyzes it
//! for parallelism and transformations, synthesizes find algorithms for
//! co-iterated tensors with an embedded decision procedure, and emits C
//! kernels. A direct AST interpreter and a dense brute-force oracle back
//! every generated kernel with differential tests.

pub mod compose;
pub mod error;
pub mod frontend;
pub mod iexpr;
pub mod layout;
pub mod presburger;
pub mod synthesis;

pub use error::{Result, SpfError};
