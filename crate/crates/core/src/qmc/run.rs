use std::collections::BTreeMap;

use super::chain::{Chain, Thermalization};
use super::grid::SamplerConfig;
use crate::error::{ConfigError, Result};
use crate::lattice::{LatticeConfig, NumberState};
use crate::stats::{binning_analysis, BinningEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Energy estimator at each retained sample.
    pub energy_trace: Vec<f64>,
    pub energy: BinningEstimate,
    /// Integrated autocorrelation time of the energy trace, in samples.
    pub autocorrelation_time: f64,
    pub thermalization: Thermalization,
    pub winding_acceptance_rate: f64,
    /// Δτ·max(δ, |κ|N).
    pub trotter_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmcRunResult {
    pub samples: Vec<NumberState>,
    /// Local-move acceptance during the sampling phase.
    pub acceptance_rate: f64,
    pub diagnostics: Diagnostics,
}

/// Seeds, thermalizes and samples one chain: after thermalization, one
/// NumberState is read from `sample_slice` every `stride` sweeps.
pub fn run(config: &LatticeConfig, sampler: &SamplerConfig) -> Result<QmcRunResult> {
    let mut chain = Chain::new(config, sampler)?;
    let thermalization = chain.thermalize(sampler)?;
    chain.reset_stats();
    let mut samples = Vec::with_capacity(sampler.n_samples);
    let mut energy_trace = Vec::with_capacity(sampler.n_samples);
    for _ in 0..sampler.n_samples {
        for _ in 0..sampler.stride {
            chain.sweep();
        }
        samples.push(chain.grid().slice_state(sampler.sample_slice));
        energy_trace.push(chain.energy());
    }
    let energy = binning_analysis(&energy_trace);
    let stats = chain.stats();
    Ok(QmcRunResult {
        samples,
        acceptance_rate: stats.local_rate(),
        diagnostics: Diagnostics {
            autocorrelation_time: energy.tau_int,
            energy,
            energy_trace,
            thermalization,
            winding_acceptance_rate: stats.winding_rate(),
            trotter_accuracy: sampler.dtau() * config.energy_scale(),
        },
    })
}

/// Independent chains on streams `rng.stream_id + i`, run on separate
/// threads. Results are in chain order.
pub fn run_chains(config: &LatticeConfig, sampler: &SamplerConfig, chains: usize) -> Result<Vec<QmcRunResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains as u64)
            .map(|i| {
                let mut s = sampler.clone();
                s.rng = sampler.rng.for_chain(i);
                scope.spawn(move || run(config, &s))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect()
    })
}

/// Means of each observable over the samples with binning error bars.
pub fn estimate_observables(
    result: &QmcRunResult,
    observables: &[&dyn Fn(&NumberState) -> f64],
) -> Result<Vec<BinningEstimate>> {
    if result.samples.len() < 2 {
        return Err(ConfigError::Sampler(format!(
            "need at least two samples, have {}",
            result.samples.len()
        ))
        .into());
    }
    Ok(observables
        .iter()
        .map(|f| {
            let series: Vec<f64> = result.samples.iter().map(|s| f(s)).collect();
            binning_analysis(&series)
        })
        .collect())
}

/// Occurrence count of each distinct sampled state.
pub fn histogram(samples: &[NumberState]) -> BTreeMap<NumberState, usize> {
    let mut h = BTreeMap::new();
    for s in samples {
        *h.entry(s.clone()).or_insert(0) += 1;
    }
    h
}
