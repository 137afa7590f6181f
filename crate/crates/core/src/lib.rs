//! Heat kernels, Γ-traces and eta invariants for operators equivariant under
//! a deck group, with finite-dimensional models of covers and cylinders.

pub mod clifford;
pub mod covering;
pub mod cylinder;
pub mod error;
pub mod eta;
pub mod gamma;
pub mod heat;
pub mod linalg;
pub mod quadrature;

pub use error::{Error, Result};
