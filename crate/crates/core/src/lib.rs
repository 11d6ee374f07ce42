//! Lattice solitons of attractive bosons on a ring: the classical discrete
//! nonlinear Schrödinger equation, exact diagonalization of the Bose-Hubbard
//! Hamiltonian and world-line quantum Monte Carlo sampling of number states.

pub mod analysis;
pub mod dnlse;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod qmc;
pub mod stats;

pub use error::{ConfigError, Error, Result};
pub use lattice::{ClassicalField, LatticeConfig, NumberState, RngStream};
