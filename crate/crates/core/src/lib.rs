//! Compiles constant and linear finite element functions on convex polytope
//! meshes into two-hidden-layer ReLU networks, and tensor finite element
//! functions into tensor neural networks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compile;
pub mod error;
pub mod io;
mod linalg;
pub mod lp;
pub mod mesh;
pub mod net;
pub mod pwl;
pub mod tensorfe;
pub mod verify;

pub use error::{Error, ErrorClass, Result};
