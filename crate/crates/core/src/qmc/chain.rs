use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::grid::{left_site, partner, seed_grid, SamplerConfig, WorldlineGrid};
use super::propagator::{build_propagator_table, BondPropagatorTable};
use crate::error::{ConfigError, Error, Result};
use crate::lattice::LatticeConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MoveStats {
    pub local_attempts: u64,
    pub local_accepted: u64,
    pub winding_attempts: u64,
    pub winding_accepted: u64,
}

impl MoveStats {
    pub fn local_rate(&self) -> f64 {
        rate(self.local_accepted, self.local_attempts)
    }

    pub fn winding_rate(&self) -> f64 {
        rate(self.winding_accepted, self.winding_attempts)
    }
}

fn rate(accepted: u64, attempts: u64) -> f64 {
    if attempts == 0 {
        0.0
    } else {
        accepted as f64 / attempts as f64
    }
}

/// Thermalization summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Thermalization {
    pub sweeps: usize,
    /// Energy estimator after each sweep.
    pub energies: Vec<f64>,
    pub acceptance_rate: f64,
    /// False if the sweep cap was hit before the energy settled.
    pub settled: bool,
}

#[inline]
fn plaquette_weight(grid: &WorldlineGrid, table: &mut BondPropagatorTable, t: usize, a: usize) -> f64 {
    let (l, s) = (grid.sites(), grid.slices());
    let b = partner(l, a, t % 2);
    let next = if t + 1 == s { 0 } else { t + 1 };
    let (na, nb) = (grid.get(t, a), grid.get(t, b));
    let na2 = grid.get(next, a);
    let m = na + nb;
    if na2 + grid.get(next, b) != m {
        return 0.0;
    }
    table.weight(m as usize, na2 as usize, na as usize)
}

/// One Markov chain over world-line configurations.
///
/// Local moves shift an atom across a bond at both corners of an inactive
/// plaquette (on the dimer: at one slice), touching at most four weighted
/// plaquettes. Winding moves drag one atom once around the ring along a
/// staircase, which local moves alone can never do.
#[derive(Debug, Clone)]
pub struct Chain {
    config: LatticeConfig,
    beta: f64,
    grid: WorldlineGrid,
    table: BondPropagatorTable,
    rng: ChaCha8Rng,
    winding_per_sweep: usize,
    symmetry_moves: bool,
    changes: Vec<(usize, usize, i32)>,
    shadow: Vec<u32>,
    plaquettes: Vec<(usize, usize)>,
    stats: MoveStats,
}

impl Chain {
    pub fn new(config: &LatticeConfig, sampler: &SamplerConfig) -> Result<Self> {
        let grid = seed_grid(config, sampler)?;
        Self::from_grid(config, sampler, grid)
    }

    /// Chain resuming from an existing grid.
    pub fn from_grid(config: &LatticeConfig, sampler: &SamplerConfig, grid: WorldlineGrid) -> Result<Self> {
        sampler.validate(config)?;
        if grid.sites() != config.sites {
            return Err(ConfigError::LengthMismatch {
                expected: config.sites,
                found: grid.sites(),
            }
            .into());
        }
        if grid.slices() != sampler.slices() {
            return Err(ConfigError::Sampler(format!(
                "grid has {} slices, sampler expects {}",
                grid.slices(),
                sampler.slices()
            ))
            .into());
        }
        sampler.accuracy_parameter(config);
        // On the dimer every slice interval applies the whole Hamiltonian.
        let slice_dtau = if config.sites == 2 {
            0.5 * sampler.dtau()
        } else {
            sampler.dtau()
        };
        let table = build_propagator_table(config, slice_dtau)?;
        let winding_per_sweep = if config.sites >= 4 && grid.slices() >= config.sites {
            sampler.winding_attempts.unwrap_or(grid.slices())
        } else {
            if config.sites >= 4 {
                log::warn!(
                    "{} slices cannot hold a winding staircase on {} sites; winding moves disabled",
                    grid.slices(),
                    config.sites
                );
            }
            0
        };
        let mut chain = Chain {
            config: *config,
            beta: sampler.beta,
            grid,
            table,
            rng: sampler.rng.generator(),
            winding_per_sweep,
            symmetry_moves: sampler.symmetry_moves,
            changes: Vec::with_capacity(2 * config.sites),
            shadow: Vec::new(),
            plaquettes: Vec::with_capacity(4 * config.sites),
            stats: MoveStats::default(),
        };
        chain.check_invariants().map_err(ConfigError::Sampler)?;
        Ok(chain)
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn grid(&self) -> &WorldlineGrid {
        &self.grid
    }

    pub fn table(&self) -> &BondPropagatorTable {
        &self.table
    }

    pub fn stats(&self) -> MoveStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = MoveStats::default();
    }

    pub fn winding_per_sweep(&self) -> usize {
        self.winding_per_sweep
    }

    /// Metropolis step for the move staged in `self.changes`.
    fn attempt(&mut self) -> bool {
        for &(s, k, d) in &self.changes {
            if (self.grid.get(s, k) as i64) + (d as i64) < 0 {
                return false;
            }
        }
        let (l, slices) = (self.grid.sites(), self.grid.slices());
        self.plaquettes.clear();
        for &(s, k, _) in &self.changes {
            let before = if s == 0 { slices - 1 } else { s - 1 };
            for t in [before, s] {
                self.plaquettes.push((t, left_site(l, k, t % 2)));
            }
        }
        self.plaquettes.sort_unstable();
        self.plaquettes.dedup();

        let mut old = 1.0;
        for &(t, a) in &self.plaquettes {
            old *= plaquette_weight(&self.grid, &mut self.table, t, a);
        }
        self.apply(1);
        let mut new = 1.0;
        for &(t, a) in &self.plaquettes {
            new *= plaquette_weight(&self.grid, &mut self.table, t, a);
        }
        let u: f64 = self.rng.random();
        let accept = new > 0.0 && (new >= old || u * old < new);
        if accept {
            #[cfg(debug_assertions)]
            for &(s, _, _) in &self.changes {
                let total: u32 = self.grid.row(s).iter().sum();
                debug_assert_eq!(total as usize, self.config.atoms, "slice {s} lost atoms");
            }
        } else {
            self.apply(-1);
        }
        accept
    }

    fn apply(&mut self, sign: i32) {
        for &(s, k, d) in &self.changes {
            let cell = self.grid.cell_mut(s, k);
            *cell = (*cell as i32 + sign * d) as u32;
        }
    }

    /// Proposes a local world-line deformation at a random vertex and
    /// direction; returns whether it was accepted.
    pub fn propose_and_apply_move(&mut self) -> bool {
        let (l, slices) = (self.grid.sites(), self.grid.slices());
        let s = self.rng.random_range(0..slices);
        let k = self.rng.random_range(0..l);
        let j = if self.rng.random::<bool>() { (k + 1) % l } else { (k + l - 1) % l };
        self.changes.clear();
        if l == 2 {
            self.changes.extend([(s, k, -1), (s, j, 1)]);
        } else {
            let t = if partner(l, k, s % 2) == j {
                if s == 0 {
                    slices - 1
                } else {
                    s - 1
                }
            } else {
                s
            };
            let t1 = (t + 1) % slices;
            self.changes.extend([(t, k, -1), (t, j, 1), (t1, k, -1), (t1, j, 1)]);
        }
        self.stats.local_attempts += 1;
        let accepted = self.attempt();
        self.stats.local_accepted += u64::from(accepted);
        accepted
    }

    /// Proposes moving one atom once around the ring: starting at a slice
    /// where bond (k₀, k₀±1) is active, slice s₀+t gains (or loses) an atom
    /// at k₀±t and loses (or gains) one at k₀, for t = 1..L−1.
    pub fn propose_winding_move(&mut self) -> bool {
        if self.winding_per_sweep == 0 {
            return false;
        }
        let (l, slices) = (self.grid.sites(), self.grid.slices());
        let mut s0 = self.rng.random_range(0..slices);
        let k0 = self.rng.random_range(0..l);
        let forward = self.rng.random::<bool>();
        let sigma = if self.rng.random::<bool>() { 1 } else { -1 };
        let step = |t: usize| if forward { (k0 + t) % l } else { (k0 + l - t) % l };
        if partner(l, k0, s0 % 2) != step(1) {
            s0 = (s0 + 1) % slices;
        }
        self.changes.clear();
        for t in 1..l {
            let s = (s0 + t) % slices;
            self.changes.push((s, step(t), sigma));
            self.changes.push((s, k0, -sigma));
        }
        self.stats.winding_attempts += 1;
        let accepted = self.attempt();
        self.stats.winding_accepted += u64::from(accepted);
        accepted
    }

    /// Applies a uniformly chosen symmetry of the weighted grid: the site map
    /// k → r ± k combined with a time shift whose parity carries each bond
    /// sublattice onto the one active at the shifted slice, plus a random
    /// even number of slices. Every plaquette weight is preserved, so the
    /// move is always accepted.
    pub fn symmetry_move(&mut self) {
        let (l, slices) = (self.grid.sites(), self.grid.slices());
        let r = self.rng.random_range(0..l);
        let reflect = self.rng.random::<bool>();
        let parity = if reflect { (r + 1) % 2 } else { r % 2 };
        let shift = parity + 2 * self.rng.random_range(0..slices / 2);
        self.grid.transform_into(r, reflect, shift, &mut self.shadow);
        self.grid.swap_cells(&mut self.shadow);
    }

    /// L·2N_β local attempts, then the configured winding attempts, then
    /// one symmetry move if enabled.
    pub fn sweep(&mut self) {
        let local = self.grid.sites() * self.grid.slices();
        for _ in 0..local {
            self.propose_and_apply_move();
        }
        for _ in 0..self.winding_per_sweep {
            self.propose_winding_move();
        }
        if self.symmetry_moves {
            self.symmetry_move();
        }
    }

    /// Energy estimator E = (Δτ_slice/β) Σ_plaquettes (h·G)/G of the current
    /// configuration; its chain average is the Trotterized ⟨H⟩.
    pub fn energy(&mut self) -> f64 {
        let (l, slices) = (self.grid.sites(), self.grid.slices());
        let mut sum = 0.0;
        for t in 0..slices {
            let next = (t + 1) % slices;
            let p = t % 2;
            for a in 0..l {
                if left_site(l, a, p) != a {
                    continue;
                }
                let b = partner(l, a, p);
                let m = (self.grid.get(t, a) + self.grid.get(t, b)) as usize;
                sum += self
                    .table
                    .energy_ratio(m, self.grid.get(next, a) as usize, self.grid.get(t, a) as usize);
            }
        }
        sum * self.table.dtau() / self.beta
    }

    /// f averaged over all time slices of the current configuration.
    pub fn slice_average<F>(&self, f: F) -> f64
    where
        F: Fn(&[u32]) -> f64,
    {
        let slices = self.grid.slices();
        (0..slices).map(|s| f(self.grid.row(s))).sum::<f64>() / slices as f64
    }

    /// Slice sums, bond conservation and positivity of every plaquette.
    pub fn check_invariants(&mut self) -> std::result::Result<(), String> {
        self.grid.check_conservation(self.config.atoms)?;
        let (l, slices) = (self.grid.sites(), self.grid.slices());
        for t in 0..slices {
            for a in 0..l {
                if left_site(l, a, t % 2) != a {
                    continue;
                }
                let w = plaquette_weight(&self.grid, &mut self.table, t, a);
                if !(w > 0.0 && w.is_finite()) {
                    return Err(format!("plaquette ({t}, {a}) has weight {w}"));
                }
            }
        }
        Ok(())
    }

    /// Runs at least `thermalization_sweeps` sweeps, then continues until
    /// the mean energy of the last window differs from the window before by
    /// less than one standard error, or the cap is reached.
    pub fn thermalize(&mut self, sampler: &SamplerConfig) -> Result<Thermalization> {
        let min = sampler.thermalization_sweeps;
        let cap = sampler.max_thermalization_sweeps.max(min);
        let window = (min / 10).max(10);
        let mut energies = Vec::new();
        let mut settled = cap == 0;
        self.reset_stats();
        for sweep in 1..=cap {
            self.sweep();
            energies.push(self.energy());
            if sweep >= min && energies.len() >= 2 * window {
                let n = energies.len();
                let (m1, v1) = mean_var(&energies[n - 2 * window..n - window]);
                let (m2, v2) = mean_var(&energies[n - window..]);
                let sigma = ((v1 + v2) / window as f64).sqrt();
                if (m2 - m1).abs() <= sigma {
                    settled = true;
                    break;
                }
            }
        }
        if !settled {
            log::warn!("thermalization hit the cap of {cap} sweeps before the energy settled");
        }
        let acceptance_rate = self.stats.local_rate();
        if self.stats.local_attempts > 0 && acceptance_rate < 1e-4 {
            return Err(Error::PathologicalAcceptance(acceptance_rate));
        }
        Ok(Thermalization {
            sweeps: energies.len(),
            energies,
            acceptance_rate,
            settled,
        })
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}
