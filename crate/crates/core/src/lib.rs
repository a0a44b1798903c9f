//! Symbolic jet-space calculus: twisted prolongations of vector fields,
//! gauge equivalences, invariant chains and symmetry reduction of ODEs.

pub mod calculus;
pub mod error;
pub mod eval;
pub mod expr;
pub mod field;
pub mod frontend;
pub mod gauge;
pub mod jet;
pub mod linalg;
pub mod matrix;
pub mod oracle;
pub mod print;
pub mod prolong;
pub mod reduction;

pub use error::{Error, Result};
pub use expr::{Expr, Symbol};
pub use field::VectorField;
pub use jet::{JetContext, MultiIndex, SolvedSystem};
pub use matrix::MatrixExpr;
pub use oracle::{EqualityConfig, OracleReport};
