use std::fmt::Write as _;

use crate::error::{ConfigError, Result};
use crate::lattice::{LatticeConfig, NumberState, RngStream};

/// Initial occupation profile copied into every time slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seeding {
    /// Atoms spread as evenly as possible; the remainder of N/L goes one
    /// atom each to sites 0, 1, ….
    Uniform,
    /// Rounded Gaussian bump; the rounding remainder goes to `center`.
    Narrow { center: usize, width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub beta: f64,
    /// Trotter steps N_β; the grid has 2N_β time slices.
    pub n_beta: usize,
    /// Minimum number of thermalization sweeps.
    pub thermalization_sweeps: usize,
    /// Hard cap on thermalization sweeps when the energy keeps drifting.
    pub max_thermalization_sweeps: usize,
    /// Sweeps between retained samples.
    pub stride: usize,
    pub n_samples: usize,
    pub rng: RngStream,
    pub seeding: Seeding,
    /// Winding-move attempts per sweep; `None` means one per time slice.
    pub winding_attempts: Option<usize>,
    /// End every sweep with a random exact symmetry of the grid (see
    /// [`Chain::symmetry_move`](super::Chain::symmetry_move)).
    pub symmetry_moves: bool,
    /// Time slice read out as the sample.
    pub sample_slice: usize,
}

impl SamplerConfig {
    /// Defaults: N_β = ⌈20·β·max(δ, |κ|N/L)⌉, 10³ thermalization sweeps,
    /// stride 10, 10³ samples, uniform seeding.
    pub fn new(config: &LatticeConfig, beta: f64) -> Self {
        SamplerConfig {
            beta,
            n_beta: default_trotter_steps(config, beta),
            thermalization_sweeps: 1000,
            max_thermalization_sweeps: 20_000,
            stride: 10,
            n_samples: 1000,
            rng: RngStream::new(0, 0),
            seeding: Seeding::Uniform,
            winding_attempts: None,
            symmetry_moves: true,
            sample_slice: 0,
        }
    }

    /// Δτ = β/N_β.
    pub fn dtau(&self) -> f64 {
        self.beta / self.n_beta as f64
    }

    /// Number of time slices, 2N_β.
    pub fn slices(&self) -> usize {
        2 * self.n_beta
    }

    pub fn validate(&self, config: &LatticeConfig) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Sampler(msg));
        if config.sites % 2 == 1 {
            return Err(ConfigError::OddSites(config.sites));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive and finite, got {}", self.beta));
        }
        if self.n_beta == 0 {
            return bad("n_beta must be at least 1".into());
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        if self.sample_slice >= self.slices() {
            return bad(format!(
                "sample_slice {} outside 0..{}",
                self.sample_slice,
                self.slices()
            ));
        }
        if let Seeding::Narrow { center, width } = self.seeding {
            if center >= config.sites {
                return bad(format!("seed center {center} outside 0..{}", config.sites));
            }
            if !(width > 0.0 && width.is_finite()) {
                return bad(format!("seed width must be positive, got {width}"));
            }
        }
        Ok(())
    }

    /// Δτ·max(δ, |κ|N); logs a warning above 0.05.
    pub fn accuracy_parameter(&self, config: &LatticeConfig) -> f64 {
        let x = self.dtau() * config.energy_scale();
        if x > 0.05 {
            log::warn!("coarse Trotter step: dtau*max(delta,|kappa|N) = {x:.3} exceeds 0.05");
        }
        x
    }
}

/// ⌈20·β·max(δ, |κ|N/L)⌉.
pub fn default_trotter_steps(config: &LatticeConfig, beta: f64) -> usize {
    let scale = config
        .delta
        .max(config.kappa.abs() * config.atoms as f64 / config.sites as f64);
    ((20.0 * beta * scale).ceil() as usize).max(1)
}

/// Site paired with `k` by the bonds active at parity `p`.
#[inline]
pub(crate) fn partner(sites: usize, k: usize, p: usize) -> usize {
    if (k + sites - p) % 2 == 0 {
        (k + 1) % sites
    } else {
        (k + sites - 1) % sites
    }
}

/// Left end of the bond active at parity `p` that contains `k`.
#[inline]
pub(crate) fn left_site(sites: usize, k: usize, p: usize) -> usize {
    if (k + sites - p) % 2 == 0 {
        k
    } else {
        (k + sites - 1) % sites
    }
}

/// Occupations n[s][k] on L sites × 2N_β time slices. Interval s → s+1
/// applies the bonds of parity s mod 2, bond (k, k+1) having parity k mod 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldlineGrid {
    sites: usize,
    slices: usize,
    occ: Vec<u32>,
}

impl WorldlineGrid {
    /// Every slice a copy of `state`.
    pub fn uniform_in_time(state: &NumberState, slices: usize) -> Self {
        let row: Vec<u32> = state.occupations().iter().map(|&n| n as u32).collect();
        let mut occ = Vec::with_capacity(row.len() * slices);
        for _ in 0..slices {
            occ.extend_from_slice(&row);
        }
        WorldlineGrid {
            sites: row.len(),
            slices,
            occ,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    #[inline]
    pub fn get(&self, slice: usize, site: usize) -> u32 {
        self.occ[slice * self.sites + site]
    }

    #[inline]
    pub(crate) fn cell_mut(&mut self, slice: usize, site: usize) -> &mut u32 {
        &mut self.occ[slice * self.sites + site]
    }

    /// Writes the transformed grid into `out`:
    /// out[s][k] = n[s + slice_shift][offset ± k], minus sign if `reflect`.
    pub(crate) fn transform_into(&self, offset: usize, reflect: bool, slice_shift: usize, out: &mut Vec<u32>) {
        let l = self.sites;
        out.clear();
        for s in 0..self.slices {
            let row = self.row((s + slice_shift) % self.slices);
            if reflect {
                out.extend((0..l).map(|k| row[(offset + l - k) % l]));
            } else {
                out.extend_from_slice(&row[offset..]);
                out.extend_from_slice(&row[..offset]);
            }
        }
    }

    pub(crate) fn swap_cells(&mut self, cells: &mut Vec<u32>) {
        debug_assert_eq!(cells.len(), self.occ.len());
        std::mem::swap(&mut self.occ, cells);
    }

    pub fn row(&self, slice: usize) -> &[u32] {
        &self.occ[slice * self.sites..(slice + 1) * self.sites]
    }

    pub fn slice_state(&self, slice: usize) -> NumberState {
        NumberState::new(self.row(slice).iter().map(|&n| n as usize).collect())
    }

    /// Checks slice sums and that occupations only change across the
    /// active bonds of each interval.
    pub fn check_conservation(&self, atoms: usize) -> std::result::Result<(), String> {
        for s in 0..self.slices {
            let total: u64 = self.row(s).iter().map(|&n| n as u64).sum();
            if total != atoms as u64 {
                return Err(format!("slice {s} holds {total} atoms, expected {atoms}"));
            }
        }
        for t in 0..self.slices {
            let next = (t + 1) % self.slices;
            let p = t % 2;
            for k in 0..self.sites {
                if left_site(self.sites, k, p) != k {
                    continue;
                }
                let j = partner(self.sites, k, p);
                let before = self.get(t, k) + self.get(t, j);
                let after = self.get(next, k) + self.get(next, j);
                if before != after {
                    return Err(format!("bond ({k},{j}) at interval {t} changes total {before} -> {after}"));
                }
            }
        }
        Ok(())
    }

    /// Text snapshot: a header line `L n_slices` followed by one line of L
    /// integers per slice.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.sites, self.slices);
        for s in 0..self.slices {
            let row = self.row(s);
            for (k, n) in row.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                write!(out, "{n}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty snapshot")?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse().map_err(|e| format!("bad header {header:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let [sites, slices] = dims[..] else {
            return Err(format!("header must be `L n_slices`, got {header:?}"));
        };
        let mut occ = Vec::with_capacity(sites * slices);
        for (i, line) in lines.enumerate() {
            let row: Vec<u32> = line
                .split_whitespace()
                .map(|x| x.parse().map_err(|e| format!("row {i}: {e}")))
                .collect::<std::result::Result<_, _>>()?;
            if row.len() != sites {
                return Err(format!("row {i} has {} entries, expected {sites}", row.len()));
            }
            occ.extend(row);
        }
        if occ.len() != sites * slices {
            return Err(format!("expected {slices} rows, found {}", occ.len() / sites.max(1)));
        }
        Ok(WorldlineGrid { sites, slices, occ })
    }
}

/// Seed occupation profile of one time slice.
pub fn seed_state(config: &LatticeConfig, seeding: Seeding) -> Result<NumberState> {
    let (l, n) = (config.sites, config.atoms);
    let occ = match seeding {
        Seeding::Uniform => (0..l).map(|k| n / l + usize::from(k < n % l)).collect(),
        Seeding::Narrow { center, width } => {
            if center >= l {
                return Err(ConfigError::Sampler(format!("seed center {center} outside 0..{l}")).into());
            }
            if !(width > 0.0 && width.is_finite()) {
                return Err(ConfigError::Sampler(format!("seed width must be positive, got {width}")).into());
            }
            let g: Vec<f64> = (0..l)
                .map(|k| {
                    let d = k.abs_diff(center).min(l - k.abs_diff(center)) as f64;
                    (-0.5 * (d / width).powi(2)).exp()
                })
                .collect();
            let total: f64 = g.iter().sum();
            let mut occ: Vec<i64> = g.iter().map(|x| (n as f64 * x / total).round() as i64).collect();
            let placed: i64 = occ.iter().sum();
            occ[center] += n as i64 - placed;
            // Rounding can only overshoot by a fraction of L atoms, which the
            // centre always holds.
            debug_assert!(occ[center] >= 0);
            occ.into_iter().map(|x| x.max(0) as usize).collect()
        }
    };
    Ok(NumberState::new(occ))
}

/// Grid with the seed state copied into every one of the 2N_β slices.
pub fn seed_grid(config: &LatticeConfig, sampler: &SamplerConfig) -> Result<WorldlineGrid> {
    sampler.validate(config)?;
    let state = seed_state(config, sampler.seeding)?;
    Ok(WorldlineGrid::uniform_in_time(&state, sampler.slices()))
}
