//! Exact quantum solution of the Bose-Hubbard ring: Fock basis, sparse
//! Hamiltonian, low-lying spectrum and number-state statistics.

mod basis;
mod distribution;
mod hamiltonian;
mod spectrum;
mod two_site;

pub use basis::{fock_dimension, FockBasis, DIMENSION_BUDGET};
pub use distribution::{
    mixture_distribution, thermal_distribution, thermal_energy, thermal_from_spectrum, zero_temp_distribution,
    DistributionSource, InverseCdf, NumberDistribution,
};
pub use hamiltonian::HamiltonianMatrix;
pub use spectrum::{
    full_spectrum, ground_states, lanczos_lowest, residual, LanczosOptions, SpectralResult, DEFAULT_DEGENERACY_TOL,
    DENSE_LIMIT,
};
pub use two_site::{two_site_distribution, two_site_scan, TwoSiteDistribution};
