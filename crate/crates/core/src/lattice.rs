//! Shared domain types for the periodic Bose-Hubbard ring.
//!
//! Units: ħ = k_B = 1, so energies, temperatures and the couplings `delta`
//! and `kappa` are all frequencies and `beta` is an inverse frequency.

use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ConfigError;

/// Physical parameters of an `L`-site ring holding `N` bosons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    /// Number of sites `L`.
    pub sites: usize,
    /// Total atom number `N`.
    pub atoms: usize,
    /// Site-to-nearest-site tunneling amplitude δ.
    pub delta: f64,
    /// On-site interaction κ; negative is attractive.
    pub kappa: f64,
}

impl LatticeConfig {
    pub fn new(sites: usize, atoms: usize, delta: f64, kappa: f64) -> Result<Self, ConfigError> {
        LatticeConfig {
            sites,
            atoms,
            delta,
            kappa,
        }
        .validate()
    }

    /// Returns the configuration unchanged if it describes a valid ring.
    pub fn validate(self) -> Result<Self, ConfigError> {
        if self.sites < 2 {
            return Err(ConfigError::TooFewSites(self.sites));
        }
        if self.atoms < 1 {
            return Err(ConfigError::NoAtoms);
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(ConfigError::NonPositiveTunneling(self.delta));
        }
        if !self.kappa.is_finite() {
            return Err(ConfigError::NonFiniteInteraction(self.kappa));
        }
        Ok(self)
    }

    /// Dimensionless interaction Λ = Nκ/δ.
    pub fn coupling(&self) -> f64 {
        self.atoms as f64 * self.kappa / self.delta
    }

    /// Builds the configuration with κ chosen so that Nκ/δ = `coupling`.
    pub fn from_coupling(
        sites: usize,
        atoms: usize,
        delta: f64,
        coupling: f64,
    ) -> Result<Self, ConfigError> {
        Self::new(sites, atoms, delta, coupling * delta / atoms.max(1) as f64)
    }

    /// Reduces any (possibly negative) site index onto the ring.
    #[inline]
    pub fn wrap(&self, k: isize) -> usize {
        k.rem_euclid(self.sites as isize) as usize
    }

    /// Neighbor of `k` one step in direction `dir` (±1) around the ring.
    #[inline]
    pub fn neighbor(&self, k: usize, dir: isize) -> usize {
        self.wrap(k as isize + dir)
    }

    /// Energy scale max(δ, |κ|N) used for relative tolerances.
    pub fn energy_scale(&self) -> f64 {
        self.delta.max(self.kappa.abs() * self.atoms as f64)
    }
}

/// Occupation numbers of the `L` sites: the object an experiment measures
/// and the sampler produces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NumberState(Vec<usize>);

impl NumberState {
    pub fn new(occupations: Vec<usize>) -> Self {
        NumberState(occupations)
    }

    /// Checks the state against a lattice: `L` entries summing to `N`.
    pub fn for_lattice(
        occupations: Vec<usize>,
        config: &LatticeConfig,
    ) -> Result<Self, ConfigError> {
        if occupations.len() != config.sites {
            return Err(ConfigError::LengthMismatch {
                expected: config.sites,
                found: occupations.len(),
            });
        }
        let total: usize = occupations.iter().sum();
        if total != config.atoms {
            return Err(ConfigError::AtomCountMismatch {
                expected: config.atoms,
                found: total,
            });
        }
        Ok(NumberState(occupations))
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Cyclic translation: the result has `n'_k = n_{k + shift mod L}`.
    pub fn shifted(&self, shift: usize) -> NumberState {
        let l = self.0.len();
        NumberState((0..l).map(|k| self.0[(k + shift) % l]).collect())
    }
}

impl std::ops::Index<usize> for NumberState {
    type Output = usize;
    fn index(&self, k: usize) -> &usize {
        &self.0[k]
    }
}

impl fmt::Display for NumberState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// Complex site amplitudes b_k of the classical (mean-field) lattice, with
/// |b_k|² the number of atoms on site k.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalField(Vec<Complex64>);

impl ClassicalField {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        ClassicalField(amplitudes)
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        ClassicalField(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Spatially uniform field b_k = √(N/L).
    pub fn uniform(config: &LatticeConfig) -> Self {
        let a = (config.atoms as f64 / config.sites as f64).sqrt();
        ClassicalField(vec![Complex64::new(a, 0.0); config.sites])
    }

    /// Gaussian bump of the given width (in sites) centred at `center`,
    /// measured along the ring, normalized to N.
    pub fn gaussian_bump(config: &LatticeConfig, center: usize, width: f64) -> Self {
        let l = config.sites as isize;
        let amps = (0..config.sites)
            .map(|k| {
                let mut dk = (k as isize - center as isize).rem_euclid(l);
                if dk > l / 2 {
                    dk -= l;
                }
                let x = dk as f64 / width;
                Complex64::new((-0.5 * x * x).exp(), 0.0)
            })
            .collect();
        let mut field = ClassicalField(amps);
        field.normalize_to(config.atoms as f64);
        field
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    /// Σ_k |b_k|².
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|b| b.norm_sqr()).sum()
    }

    /// Site occupations |b_k|².
    pub fn densities(&self) -> Vec<f64> {
        self.0.iter().map(|b| b.norm_sqr()).collect()
    }

    /// Rescales so that Σ|b_k|² = `atoms`.
    pub fn normalize_to(&mut self, atoms: f64) {
        let norm = self.norm_sqr();
        if norm > 0.0 {
            let s = (atoms / norm).sqrt();
            self.0.iter_mut().for_each(|b| *b *= s);
        }
    }

    pub fn shifted(&self, shift: usize) -> ClassicalField {
        let l = self.0.len();
        ClassicalField((0..l).map(|k| self.0[(k + shift) % l]).collect())
    }

    /// Global phase e^{iφ} that best maps `self` onto `other`, i.e. the
    /// phase of Σ_k conj(self_k)·other_k.
    pub fn relative_phase(&self, other: &ClassicalField) -> Complex64 {
        let overlap: Complex64 = self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum();
        if overlap.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            overlap / overlap.norm()
        }
    }

    /// ℓ² distance after removing the optimal global phase.
    pub fn phase_invariant_distance(&self, other: &ClassicalField) -> f64 {
        let phase = self.relative_phase(other);
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a * phase - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Reproducible random stream: one `(seed, stream_id)` pair per Markov chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream for the `chain`-th of several concurrent chains.
    pub fn for_chain(&self, chain: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(chain),
        }
    }
}
