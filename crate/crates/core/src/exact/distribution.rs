use rand::Rng;

use super::basis::FockBasis;
use super::hamiltonian::HamiltonianMatrix;
use super::spectrum::{full_spectrum, SpectralResult};
use crate::error::{Error, Result};
use crate::lattice::NumberState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSource {
    /// Equal mixture of `states` (near-)degenerate ground states.
    GroundMixture { states: usize },
    Thermal { beta: f64 },
}

/// Probability P(n) of measuring each number state.
#[derive(Debug, Clone)]
pub struct NumberDistribution {
    pub states: Vec<NumberState>,
    pub probabilities: Vec<f64>,
    pub source: DistributionSource,
}

impl NumberDistribution {
    fn from_weights(basis: &FockBasis, mut weights: Vec<f64>, source: DistributionSource) -> Self {
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        NumberDistribution {
            states: basis.states().collect(),
            probabilities: weights,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// ⟨f(n̂)⟩ = Σ_n P(n) f(n).
    pub fn expectation<F>(&self, f: F) -> f64
    where
        F: Fn(&NumberState) -> f64,
    {
        self.states
            .iter()
            .zip(&self.probabilities)
            .map(|(s, p)| p * f(s))
            .sum()
    }

    /// Marginal distribution of the occupation of one site, indexed by n.
    pub fn site_marginal(&self, site: usize) -> Vec<f64> {
        let max = self.states.iter().map(|s| s[site]).max().unwrap_or(0);
        let mut out = vec![0.0; max + 1];
        for (s, p) in self.states.iter().zip(&self.probabilities) {
            out[s[site]] += p;
        }
        out
    }

    /// Inverse-CDF sampler over the states of this distribution.
    pub fn sampler(&self) -> InverseCdf<'_> {
        let mut acc = 0.0;
        let cdf = self
            .probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        InverseCdf { dist: self, cdf }
    }
}

pub struct InverseCdf<'a> {
    dist: &'a NumberDistribution,
    cdf: Vec<f64>,
}

impl InverseCdf<'_> {
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap_or(&1.0);
        let u: f64 = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &NumberState {
        &self.dist.states[self.sample_index(rng)]
    }
}

/// Equal mixture of the first `count` eigenstates:
/// P(n) = (1/g) Σ_a |⟨n|ψ_a⟩|².
pub fn mixture_distribution(spectral: &SpectralResult, basis: &FockBasis, count: usize) -> Result<NumberDistribution> {
    if count == 0 || spectral.len() < count {
        return Err(Error::EmptyMixture);
    }
    let mut weights = vec![0.0; basis.dim()];
    for v in &spectral.eigenvectors[..count] {
        for (w, x) in weights.iter_mut().zip(v) {
            *w += x * x;
        }
    }
    Ok(NumberDistribution::from_weights(
        basis,
        weights,
        DistributionSource::GroundMixture { states: count },
    ))
}

/// Zero-temperature number distribution: the equal mixture of every state
/// flagged degenerate with the ground state.
pub fn zero_temp_distribution(spectral: &SpectralResult, basis: &FockBasis) -> Result<NumberDistribution> {
    if spectral.is_empty() || spectral.degenerate_count == 0 {
        return Err(Error::EmptyMixture);
    }
    if !spectral.degeneracy_complete {
        return Err(Error::IncompleteDegenerateSet {
            computed: spectral.len(),
        });
    }
    mixture_distribution(spectral, basis, spectral.degenerate_count)
}

/// P(n) = ⟨n|e^{−βH}|n⟩ / Tr e^{−βH} from the full spectrum.
pub fn thermal_distribution(h: &HamiltonianMatrix, basis: &FockBasis, beta: f64) -> Result<NumberDistribution> {
    let spectrum = full_spectrum(h)?;
    Ok(thermal_from_spectrum(&spectrum, basis, beta))
}

/// Thermal diagonal ensemble from an already computed full spectrum.
pub fn thermal_from_spectrum(spectrum: &SpectralResult, basis: &FockBasis, beta: f64) -> NumberDistribution {
    let e0 = spectrum.eigenvalues[0];
    let boltzmann: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .map(|&e| {
            if beta.is_infinite() {
                if e == e0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-beta * (e - e0)).exp()
            }
        })
        .collect();
    let mut weights = vec![0.0; basis.dim()];
    for (b, v) in boltzmann.iter().zip(&spectrum.eigenvectors) {
        if *b == 0.0 {
            continue;
        }
        for (w, x) in weights.iter_mut().zip(v) {
            *w += b * x * x;
        }
    }
    NumberDistribution::from_weights(basis, weights, DistributionSource::Thermal { beta })
}

/// Thermal energy ⟨H⟩ at inverse temperature β.
pub fn thermal_energy(spectrum: &SpectralResult, beta: f64) -> f64 {
    let e0 = spectrum.eigenvalues[0];
    let (mut z, mut e) = (0.0, 0.0);
    for &x in &spectrum.eigenvalues {
        let w = (-beta * (x - e0)).exp();
        z += w;
        e += w * x;
    }
    e / z
}
