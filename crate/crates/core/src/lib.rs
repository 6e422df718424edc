// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod linalg;
mod newton;
pub mod norms;
pub mod operators;
pub mod oracle;
pub mod quadrature;
pub mod source;

pub use error::{Error, Result};
pub use newton::NewtonStats;
