//! Randomized approximation of mixed volumes of lattice polytopes, with exact
//! oracles for every intermediate quantity.

pub mod capacity;
pub mod error;
pub mod estimator;
pub mod generate;
pub mod geometry;
pub mod linprog;
pub mod minkpoly;
pub mod num;
pub mod sampling;
pub mod subdivision;

pub use error::{Error, Result};
pub use num::Rat;
