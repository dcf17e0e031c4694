//! Invariant measures of polynomial dynamical systems through moment relaxations.

pub mod cli;
pub mod config;
pub mod error;
pub mod invariance;
pub mod moment;
pub mod objective;
pub mod parse;
pub mod polynomial;
pub mod reconstruct;
pub mod simulate;
pub mod solver;

pub use error::{Error, Result};
pub use polynomial::{Basis, MultiIndex, Polynomial, PolynomialMap};
