//! Machine-checkable Lieb-Robinson certificates for small quantum spin
//! lattices.
//!
//! The crate evaluates the lattice constants (`‖F‖`, `C_a`, `‖Φ‖_a`), builds
//! Hamiltonians from interactions, runs exact Heisenberg dynamics by dense
//! diagonalization, and compares measured commutators, correlations and
//! finite-volume differences against the corresponding analytic bounds.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod interaction;
pub mod lattice;
pub mod linalg;
pub mod ode;
pub mod space;

pub use error::{Error, Result};
