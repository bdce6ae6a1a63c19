//! Geodesic counting, matrix Jacobi fields and Herglotz measure recovery on
//! model Riemannian manifolds.

pub mod cli;
pub mod counting;
pub mod error;
pub mod flow;
pub mod herglotz;
pub mod linalg;
pub mod manifolds;
pub mod output;

pub use error::{Error, Result};
