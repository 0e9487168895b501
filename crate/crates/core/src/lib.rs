//! Horospherical depth on Hadamard manifolds.
//!
//! The crate computes horospherical (Busemann) depth, sampled-direction
//! depth regions and Busemann medians on Euclidean space, the Poincaré ball
//! and the cone of symmetric positive-definite matrices, together with the
//! robustness and convergence experiments built on top of them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod depth;
pub mod error;
pub mod estimators;
pub mod io;
pub mod manifold;
pub mod measure;
pub mod robustness;

pub use error::{HoroError, Result};
