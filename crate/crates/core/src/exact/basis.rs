use crate::error::{ConfigError, Result};
use crate::lattice::{LatticeConfig, NumberState};

/// Largest Fock dimension the enumerator accepts.
pub const DIMENSION_BUDGET: u128 = 10_000_000;

/// Number of ways to put `atoms` bosons on `sites` sites, C(N+L−1, L−1),
/// saturating at `u128::MAX`.
pub fn fock_dimension(sites: usize, atoms: usize) -> u128 {
    if sites == 0 {
        return u128::from(atoms == 0);
    }
    let n = (atoms + sites - 1) as u128;
    let k = (sites - 1).min(atoms) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        // c·(n−i) is divisible by (i+1) after the multiplication.
        c = match c.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// All number states of a lattice in lexicographically descending order,
/// `(N,0,…,0)` first, with an O(L) combinatorial rank.
#[derive(Debug, Clone)]
pub struct FockBasis {
    config: LatticeConfig,
    /// Flattened occupations, `L` entries per state.
    occupations: Vec<u32>,
    /// `compositions[r * (L+1) + s]` = ways to place `r` atoms on `s` sites.
    compositions: Vec<u64>,
    dim: usize,
}

impl FockBasis {
    pub fn enumerate(config: &LatticeConfig) -> Result<Self> {
        let config = config.validate()?;
        let d = fock_dimension(config.sites, config.atoms);
        if d > DIMENSION_BUDGET {
            return Err(ConfigError::DimensionBudget {
                dimension: d,
                budget: DIMENSION_BUDGET,
            }
            .into());
        }
        let (l, n) = (config.sites, config.atoms);
        let dim = d as usize;

        let mut compositions = vec![0u64; (n + 1) * (l + 1)];
        for r in 0..=n {
            for s in 0..=l {
                compositions[r * (l + 1) + s] = fock_dimension(s, r) as u64;
            }
        }

        let mut occupations = Vec::with_capacity(dim * l);
        let mut state = vec![0u32; l];
        state[0] = n as u32;
        loop {
            occupations.extend_from_slice(&state);
            // Successor in descending lex order: take one atom from the last
            // non-empty site before the end and pile everything after it onto
            // the next site.
            let Some(k) = (0..l - 1).rev().find(|&k| state[k] > 0) else {
                break;
            };
            let tail: u32 = state[k + 1..].iter().sum();
            state[k] -= 1;
            state[k + 1..].iter_mut().for_each(|x| *x = 0);
            state[k + 1] = tail + 1;
        }
        debug_assert_eq!(occupations.len(), dim * l);

        Ok(FockBasis {
            config,
            occupations,
            compositions,
            dim,
        })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Occupations of the `i`-th basis state.
    pub fn occupations(&self, i: usize) -> &[u32] {
        let l = self.config.sites;
        &self.occupations[i * l..(i + 1) * l]
    }

    pub fn state(&self, i: usize) -> NumberState {
        NumberState::new(self.occupations(i).iter().map(|&x| x as usize).collect())
    }

    pub fn states(&self) -> impl Iterator<Item = NumberState> + '_ {
        (0..self.dim).map(|i| self.state(i))
    }

    #[inline]
    fn count(&self, atoms: usize, sites: usize) -> u64 {
        self.compositions[atoms * (self.config.sites + 1) + sites]
    }

    /// Position of an occupation vector in the basis, or `None` if it does
    /// not belong to this lattice.
    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        let l = self.config.sites;
        if occ.len() != l {
            return None;
        }
        let mut remaining = self.config.atoms;
        let mut idx: u64 = 0;
        for (k, &v) in occ.iter().enumerate().take(l - 1) {
            let v = v as usize;
            if v > remaining {
                return None;
            }
            // States with a larger value at site k and the same prefix:
            // Σ_{u>v} C(R−u + s−1, s−1) = C(R−v−1 + s, s) with s = L−k−1.
            if v < remaining {
                idx += self.count(remaining - v - 1, l - k);
            }
            remaining -= v;
        }
        if occ[l - 1] as usize != remaining {
            return None;
        }
        Some(idx as usize)
    }

    pub fn index(&self, state: &NumberState) -> Option<usize> {
        let occ: Vec<u32> = state.occupations().iter().map(|&x| x as u32).collect();
        self.index_of(&occ)
    }
}
