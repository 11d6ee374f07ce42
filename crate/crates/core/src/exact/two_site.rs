use super::basis::FockBasis;
use super::distribution::mixture_distribution;
use super::hamiltonian::HamiltonianMatrix;
use super::spectrum::{ground_states, DEFAULT_DEGENERACY_TOL};
use crate::error::{ConfigError, Result};
use crate::lattice::LatticeConfig;

/// Distribution of the number of atoms on site 0 of the dimer.
#[derive(Debug, Clone)]
pub struct TwoSiteDistribution {
    pub atoms: usize,
    /// `probabilities[n]` = P_n, the chance to find n atoms on site 0.
    pub probabilities: Vec<f64>,
    /// E₁ − E₀ of the two states in the mixture.
    pub splitting: f64,
}

impl TwoSiteDistribution {
    /// Rows `(n, n/N, √N·P_n)`.
    pub fn scaled(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let n = self.atoms as f64;
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(k, p)| (k, k as f64 / n, n.sqrt() * p))
    }
}

/// Two-site number statistics at fixed Λ = Nκ/δ for each atom number: the
/// ground state is taken as the 50/50 mixture of the two lowest states.
pub fn two_site_scan(atom_numbers: &[usize], coupling: f64, delta: f64) -> Result<Vec<TwoSiteDistribution>> {
    if atom_numbers.is_empty() {
        return Err(ConfigError::Solver("empty atom-number list".into()).into());
    }
    atom_numbers
        .iter()
        .map(|&n| two_site_distribution(n, coupling, delta))
        .collect()
}

pub fn two_site_distribution(atoms: usize, coupling: f64, delta: f64) -> Result<TwoSiteDistribution> {
    let config = LatticeConfig::from_coupling(2, atoms, delta, coupling)?;
    let basis = FockBasis::enumerate(&config)?;
    let h = HamiltonianMatrix::build(&basis);
    let count = 2.min(basis.dim());
    let spectral = ground_states(&h, count, DEFAULT_DEGENERACY_TOL)?;
    let dist = mixture_distribution(&spectral, &basis, count)?;
    let probabilities = dist.site_marginal(0);
    let splitting = if count == 2 {
        spectral.eigenvalues[1] - spectral.eigenvalues[0]
    } else {
        0.0
    };
    Ok(TwoSiteDistribution {
        atoms,
        probabilities,
        splitting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_symmetric() {
        for n in [7, 16, 64, 200] {
            let d = two_site_distribution(n, -2.309, 1.0).unwrap();
            for k in 0..=n {
                assert!((d.probabilities[k] - d.probabilities[n - k]).abs() < 1e-10);
            }
            let total: f64 = d.probabilities.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_atom_mixture_is_flat() {
        let d = two_site_distribution(1, -2.309, 1.0).unwrap();
        assert!((d.probabilities[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_list_rejected() {
        assert!(two_site_scan(&[], -2.309, 1.0).is_err());
    }

    #[test]
    fn scaled_rows() {
        let d = two_site_distribution(4, 0.0, 1.0).unwrap();
        let rows: Vec<_> = d.scaled().collect();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[2].0, 2);
        assert!((rows[2].1 - 0.5).abs() < 1e-15);
        assert!((rows[2].2 - 2.0 * d.probabilities[2]).abs() < 1e-15);
    }
}
