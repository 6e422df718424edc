//! Discrete local and fractional Laplacians on the unit box.

mod kato;
mod kernel;
mod matrix;

pub use kato::{kato_inequality, regularized_abs, regularized_abs_slope, KatoReport};
pub use kernel::{abs_offset as abs_lattice_offset, normalization_constant, KernelWeights};
pub use matrix::{
    apply_operator, assemble_fractional_laplacian, assemble_local_laplacian, assemble_mixed, dot,
    OperatorDiagnostics, OperatorMatrix, DENSE_LIMIT,
};
