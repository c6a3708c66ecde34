//! Spectral Galerkin solver with numerical integration on Gauss-Lobatto-Jacobi
//! grids for Bona-Smith type Boussinesq systems with Dirichlet data.

// `!(a > b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod experiments;
pub mod jacobi;
pub mod linalg;
pub mod model;
pub mod semidiscrete;
pub mod time;
