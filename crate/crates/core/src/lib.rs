//! Aggregation coarsening for algebraic multigrid driven by compatible
//! weighted matching.
//!
//! The crate builds pairwise aggregates from maximum product matchings of
//! the edge-weight graph of an SPD matrix, assembles the piecewise constant
//! prolongator and its complement, and measures aggregate quality through
//! the constant `mu_c`, its local spectral bound and the compatible
//! relaxation ratio. Everything here works on `alloc` only; file formats
//! and the command line live in the companion `cwm` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coarsening;
pub mod dense;
pub mod error;
pub mod factor;
pub mod lanczos;
pub mod matching;
pub mod problems;
pub mod quality;
pub mod rng;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use sparse::{DenseVector, DiagonalMatrix, SparseMatrix};
