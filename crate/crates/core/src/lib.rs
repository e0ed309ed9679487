//! Exact and numerical tools for oriented-percolation infection patterns on
//! layered graphs `G × ℤ`.

pub mod bounds;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod monotonicity;
pub mod montecarlo;
pub mod pattern;
pub mod qsd;
pub mod saw;

pub use error::{Error, Result};
