//! Dilute Curie-Weiss model: exact disorder averages, annealed and quenched
//! partition-function statistics, and their limit laws.

pub mod annealed;
pub mod combinatorics;
pub mod error;
pub mod expansions;
pub mod limits;
pub mod model;
pub mod numeric;
pub mod quadrature;
pub mod quenched;
pub mod seed;

pub use error::{Error, Result};
pub use model::{DisorderGraph, ModelParams, SpinConfig};
