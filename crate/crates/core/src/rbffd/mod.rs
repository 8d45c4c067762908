//! RBF-FD weights with polyharmonic spline kernels and polynomial augmentation,
//! and the sparse Laplacian, interpolation and injection operators built from them.

mod assemble;
mod sparse;
mod stencil;

pub use assemble::{assemble_I, assemble_L, assemble_R};
pub use sparse::SparseOperator;
pub use stencil::{
    monomial_exponents, phs, phs_laplacian, poly_terms, stencil_weights, Operator, StencilConfig, RCOND_MIN,
};
