//! Estimation, hypothesis testing and limit laws for one-parameter Ising
//! models on dense regular coupling matrices.

pub mod coupling;
pub mod error;
pub mod harness;
pub mod inference;
pub mod quadrature;
pub mod sampler;
pub mod seed;
pub mod stats;
pub mod testing;
pub mod theory;

pub use error::{Error, Result};
