//! World-line quantum Monte Carlo with a checkerboard Trotter decomposition.
//!
//! Each inverse-temperature step Δτ = β/N_β is split into an even-bond and
//! an odd-bond half, so the grid holds 2N_β time slices. Every active bond
//! interval contributes one matrix element of exp(−Δτ·h_bond).

mod chain;
mod grid;
mod propagator;
mod run;

pub use chain::{Chain, MoveStats, Thermalization};
pub use grid::{default_trotter_steps, seed_grid, seed_state, SamplerConfig, Seeding, WorldlineGrid};
pub use propagator::{bond_hamiltonian, build_propagator_table, BondPropagatorTable};
pub use run::{estimate_observables, histogram, run, run_chains, Diagnostics, QmcRunResult};
