//! Discrete vector Allen-Cahn energies on masked grid domains.
//!
//! The crate assembles the energy J(v) = sum(1/2 |grad v|^2 + W(v)) over a
//! masked uniform grid, minimizes it subject to Dirichlet boundary values,
//! and exposes the constructions needed to verify the variational maximum
//! principle numerically: the polar split of the energy, the cutoff
//! competitor, and the linearization of the Euler-Lagrange system.

pub mod competitor;
pub mod decompose;
pub mod energy;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linearize;
pub mod minimize;
pub mod potential;

pub use error::{Error, Result};
