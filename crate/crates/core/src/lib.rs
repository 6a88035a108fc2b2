#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod expr;
pub mod fde;
pub mod linalg;
pub mod quadrature;
pub mod structure;
pub mod verify;

pub use calculus::{AlphaOrder, RealFunction};
pub use error::{Error, Result};
pub use expr::Expr;
pub use fde::{InitialCondition, SequentialFde, SolveOptions, Trajectory};
pub use structure::{FundamentalSet, WronskianSample};
