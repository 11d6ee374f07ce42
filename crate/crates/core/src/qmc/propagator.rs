use nalgebra::DMatrix;

use crate::error::{ConfigError, Result};
use crate::lattice::LatticeConfig;

/// Bond Hamiltonian in the block of fixed bond total m, basis n_i = 0..=m.
///
/// On rings with L ≥ 3 each site's (κ/2)n(n−1) is split between its two
/// bonds. On the dimer the single bond carries the full Hamiltonian.
pub fn bond_hamiltonian(config: &LatticeConfig, m: usize) -> DMatrix<f64> {
    let (hop, share) = if config.sites == 2 {
        (config.delta, 0.5 * config.kappa)
    } else {
        (0.5 * config.delta, 0.25 * config.kappa)
    };
    let dim = m + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for ni in 0..=m {
        let nj = m - ni;
        let (a, b) = (ni as f64, nj as f64);
        h[(ni, ni)] = share * (a * (a - 1.0) + b * (b - 1.0));
        if ni < m {
            // ⟨ni+1, nj−1| b_i† b_j |ni, nj⟩ = √((ni+1) nj)
            let t = -hop * ((a + 1.0) * b).sqrt();
            h[(ni + 1, ni)] = t;
            h[(ni, ni + 1)] = t;
        }
    }
    h
}

/// exp(−dtau·h) for a symmetric matrix with non-positive off-diagonals.
///
/// A = −dtau·h is shifted by its smallest diagonal entry so that every term
/// of the Taylor series is non-negative; scaling and squaring then never
/// subtracts, and the result keeps full relative accuracy in tiny entries.
fn positive_exponential(h: &DMatrix<f64>, dtau: f64) -> DMatrix<f64> {
    let dim = h.nrows();
    let mut a = h * (-dtau);
    let shift = (0..dim).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min);
    for i in 0..dim {
        a[(i, i)] -= shift;
    }
    for x in a.iter_mut() {
        *x = x.max(0.0);
    }
    let norm = a
        .row_iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scaled = norm;
    while scaled > 0.5 {
        scaled *= 0.5;
        squarings += 1;
    }
    a /= 2f64.powi(squarings);

    let mut result = DMatrix::identity(dim, dim);
    let mut term = DMatrix::identity(dim, dim);
    // At least min(dim, 30) terms so that small blocks fill their whole band
    // before squaring.
    for k in 1..=200 {
        term = &term * &a / k as f64;
        result += &term;
        let t = term.amax();
        if t == 0.0 || (k >= dim.min(30) && t <= 1e-30 * result.amax()) {
            break;
        }
    }
    // Renormalize while squaring; the true matrix is result·e^{log_scale}.
    let mut log_scale = 0.0;
    for _ in 0..squarings {
        result = &result * &result;
        log_scale *= 2.0;
        let max = result.amax();
        result /= max;
        log_scale += max.ln();
    }
    result *= (log_scale + shift).exp();
    symmetrize_orbits(&result)
}

/// Averages each entry over its orbit under transposition and the site
/// exchange (i, j) → (m−i, m−j), summing in a fixed order so that the four
/// entries of an orbit are bitwise equal.
fn symmetrize_orbits(g: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = g.nrows();
    let last = dim - 1;
    DMatrix::from_fn(dim, dim, |i, j| {
        let mut orbit = [(i, j), (j, i), (last - i, last - j), (last - j, last - i)];
        orbit.sort_unstable();
        let (mut sum, mut count, mut prev) = (0.0, 0.0, None);
        for e in orbit {
            if prev != Some(e) {
                sum += g[e];
                count += 1.0;
                prev = Some(e);
            }
        }
        sum / count
    })
}

#[derive(Debug, Clone)]
struct Block {
    dim: usize,
    g: Vec<f64>,
    hg: Vec<f64>,
}

/// Cached bond propagators G_m = exp(−Δτ·h_bond) per bond total m, grown
/// lazily, together with h·G for the energy estimator.
#[derive(Debug, Clone)]
pub struct BondPropagatorTable {
    config: LatticeConfig,
    dtau: f64,
    blocks: Vec<Option<Block>>,
}

impl BondPropagatorTable {
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    /// Number of blocks built so far.
    pub fn cached_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.is_some()).count()
    }

    fn block(&mut self, m: usize) -> &Block {
        if m >= self.blocks.len() {
            self.blocks.resize(m + 1, None);
        }
        let (config, dtau) = (self.config, self.dtau);
        self.blocks[m].get_or_insert_with(|| {
            let h = bond_hamiltonian(&config, m);
            let g = positive_exponential(&h, dtau);
            let hg = &h * &g;
            let dim = m + 1;
            // Column-major storage; entry (to, from) lives at to + from·dim.
            Block {
                dim,
                g: g.as_slice().to_vec(),
                hg: hg.as_slice().to_vec(),
            }
        })
    }

    /// ⟨to, m−to| G_m |from, m−from⟩.
    #[inline]
    pub fn weight(&mut self, m: usize, to: usize, from: usize) -> f64 {
        let b = self.block(m);
        b.g[to + from * b.dim]
    }

    /// (h·G_m)[to, from] / G_m[to, from].
    #[inline]
    pub fn energy_ratio(&mut self, m: usize, to: usize, from: usize) -> f64 {
        let b = self.block(m);
        let i = to + from * b.dim;
        b.hg[i] / b.g[i]
    }

    /// Dense copy of G_m.
    pub fn matrix(&mut self, m: usize) -> DMatrix<f64> {
        let b = self.block(m);
        DMatrix::from_column_slice(b.dim, b.dim, &b.g)
    }
}

/// Propagator table for imaginary-time step `dtau`; blocks up to
/// `config.atoms` are built on first use.
pub fn build_propagator_table(config: &LatticeConfig, dtau: f64) -> Result<BondPropagatorTable> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(ConfigError::Sampler(format!("imaginary-time step must be positive, got {dtau}")).into());
    }
    Ok(BondPropagatorTable {
        config: *config,
        dtau,
        blocks: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{FockBasis, HamiltonianMatrix};
    use approx::assert_relative_eq;

    fn cfg(l: usize, n: usize, kappa: f64) -> LatticeConfig {
        LatticeConfig::new(l, n, 1.0, kappa).unwrap()
    }

    fn spectral_exp(h: &DMatrix<f64>, dtau: f64) -> DMatrix<f64> {
        let e = h.clone().symmetric_eigen();
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| (-dtau * x).exp()));
        &e.eigenvectors * d * e.eigenvectors.transpose()
    }

    #[test]
    fn small_blocks() {
        let c = cfg(4, 4, -1.0);
        assert_eq!(bond_hamiltonian(&c, 0), DMatrix::zeros(1, 1));
        let h1 = bond_hamiltonian(&c, 1);
        assert_eq!(h1, DMatrix::from_row_slice(2, 2, &[0.0, -0.5, -0.5, 0.0]));
        let h2 = bond_hamiltonian(&c, 2);
        let r = 0.5 * 2f64.sqrt();
        let want = DMatrix::from_row_slice(3, 3, &[-0.5, -r, 0.0, -r, 0.0, -r, 0.0, -r, -0.5]);
        assert_relative_eq!(h2, want, epsilon = 1e-15);
    }

    #[test]
    fn dimer_bond_is_the_full_hamiltonian() {
        for (n, kappa) in [(3, -0.4), (6, 0.9)] {
            let c = cfg(2, n, kappa);
            let h = bond_hamiltonian(&c, n);
            let basis = FockBasis::enumerate(&c).unwrap();
            let full = HamiltonianMatrix::build(&basis).to_dense();
            // The exact basis is ordered with n₀ descending.
            for i in 0..=n {
                for j in 0..=n {
                    assert_relative_eq!(h[(n - i, n - j)], full[(i, j)], epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn bond_blocks_match_exact_two_site_builder() {
        // A ring bond equals the dimer Hamiltonian with δ/2 and κ/2.
        let c = cfg(4, 9, -0.6);
        let dimer = LatticeConfig::new(2, 5, 0.5, -0.3).unwrap();
        let basis = FockBasis::enumerate(&dimer).unwrap();
        let full = HamiltonianMatrix::build(&basis).to_dense();
        let h = bond_hamiltonian(&c, 5);
        for i in 0..=5 {
            for j in 0..=5 {
                assert_relative_eq!(h[(5 - i, 5 - j)], full[(i, j)], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn single_atom_propagator_is_hyperbolic() {
        let c = cfg(4, 4, 0.0);
        for dtau in [0.01, 0.3, 2.0] {
            let mut t = build_propagator_table(&c, dtau).unwrap();
            let g = t.matrix(1);
            let (ch, sh) = ((0.5 * dtau).cosh(), (0.5 * dtau).sinh());
            assert_relative_eq!(g[(0, 0)], ch, max_relative = 1e-14);
            assert_relative_eq!(g[(1, 1)], ch, max_relative = 1e-14);
            assert_relative_eq!(g[(0, 1)], sh, max_relative = 1e-14);
            assert_relative_eq!(g[(1, 0)], sh, max_relative = 1e-14);
        }
    }

    #[test]
    fn matches_spectral_oracle() {
        let all = [0, 1, 2, 5, 17, 64, 150];
        let cases: [(usize, f64, f64, &[usize]); 5] = [
            (4, -0.5, 0.05, &all),
            (4, -0.5, 4.0, &all[..5]),
            (16, -0.004, 0.05, &all),
            (2, 0.7, 0.3, &all),
            (6, 1.3, 0.02, &all),
        ];
        for (l, kappa, dtau, ms) in cases {
            let c = cfg(l, 300, kappa);
            let mut t = build_propagator_table(&c, dtau).unwrap();
            for &m in ms {
                let g = t.matrix(m);
                let oracle = spectral_exp(&bond_hamiltonian(&c, m), dtau);
                let scale = oracle.amax();
                for (a, b) in g.iter().zip(oracle.iter()) {
                    assert!((a - b).abs() <= 1e-11 * scale, "L={l} m={m}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn identity_limit() {
        let c = cfg(4, 10, -0.8);
        let dtau = 1e-7;
        let mut t = build_propagator_table(&c, dtau).unwrap();
        for m in 0..=10 {
            let g = t.matrix(m);
            let h = bond_hamiltonian(&c, m);
            let first_order = DMatrix::identity(m + 1, m + 1) - h * dtau;
            assert_relative_eq!(g, first_order, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_bad_step() {
        let c = cfg(4, 4, 0.0);
        assert!(build_propagator_table(&c, 0.0).is_err());
        assert!(build_propagator_table(&c, f64::NAN).is_err());
    }

    #[test]
    fn energy_ratio_consistent() {
        let c = cfg(4, 6, -0.5);
        let mut t = build_propagator_table(&c, 0.4).unwrap();
        let g = t.matrix(3);
        let hg = bond_hamiltonian(&c, 3) * &g;
        for to in 0..=3 {
            for from in 0..=3 {
                assert_relative_eq!(t.energy_ratio(3, to, from), hg[(to, from)] / g[(to, from)], max_relative = 1e-12);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn blocks_positive_and_symmetric(m in 0usize..30, kappa in -2.0f64..2.0, dtau in 0.001f64..1.0, l in proptest::sample::select(vec![2usize, 4, 16])) {
            let c = cfg(l, 30, kappa);
            let mut t = build_propagator_table(&c, dtau).unwrap();
            let g = t.matrix(m);
            for i in 0..=m {
                for j in 0..=m {
                    proptest::prop_assert!(g[(i, j)] > 0.0, "G[{i},{j}] = {}", g[(i, j)]);
                    proptest::prop_assert_eq!(g[(i, j)], g[(j, i)]);
                    proptest::prop_assert_eq!(g[(i, j)], g[(m - i, m - j)]);
                }
            }
        }
    }
}
