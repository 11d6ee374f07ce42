use std::path::{Path, PathBuf};

use lattice_soliton::analysis::{align, peak_statistics, soliton_score};
use lattice_soliton::dnlse::{imaginary_time_ground_state, RelaxOptions, SeedShape};
use lattice_soliton::exact::{
    full_spectrum, ground_states, thermal_from_spectrum, two_site_scan, zero_temp_distribution, FockBasis,
    HamiltonianMatrix, DEFAULT_DEGENERACY_TOL,
};
use lattice_soliton::qmc::{histogram, run, QmcRunResult, SamplerConfig, Seeding};
use lattice_soliton::{LatticeConfig, NumberState, RngStream};
use rayon::prelude::*;

use crate::manifest::{now, ChainSeed, RunManifest};
use crate::output::{chart, float, write_file, CsvData, Series, Style, Table};
use crate::params::{parse_list, Params};
use crate::CliError;

const LATTICE_KEYS: [&str; 4] = ["sites", "atoms", "delta", "kappa"];

pub const CLASSICAL_KEYS: &[&str] = &[
    "sites", "atoms", "delta", "kappa", "seed_shape", "seed_center", "seed_width", "noise_amplitude",
    "noise_seed", "tol", "residual_tol", "max_iter", "dtau",
];
pub const EXACT_KEYS: &[&str] = &["sites", "atoms", "delta", "kappa", "beta", "states", "degeneracy_tol"];
pub const FIG1_KEYS: &[&str] = &["lambda", "delta", "n_list"];
pub const QMC_KEYS: &[&str] = &[
    "sites", "atoms", "delta", "kappa", "beta", "n_beta", "thermalization", "max_thermalization", "stride",
    "samples", "seed", "chains", "seeding", "seed_center", "seed_width", "winding", "symmetry_moves",
    "sample_slice",
];
pub const COMPARE_KEYS: &[&str] = &["classical", "samples"];

pub fn allowed_keys(command: &str) -> Option<&'static [&'static str]> {
    match command {
        "classical" => Some(CLASSICAL_KEYS),
        "exact" => Some(EXACT_KEYS),
        "fig1" => Some(FIG1_KEYS),
        "qmc" => Some(QMC_KEYS),
        "compare" => Some(COMPARE_KEYS),
        _ => None,
    }
}

#[derive(Default)]
struct Report {
    outputs: Vec<String>,
    seeds: Vec<ChainSeed>,
    /// Set when outputs were written but the run did not meet its goal.
    failure: Option<String>,
}

/// Runs `command`, then writes its manifest next to the outputs.
pub fn execute(command: &str, mut params: Params, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let started = now();
    let report = match command {
        "classical" => classical(&mut params, out),
        "exact" => exact(&mut params, out),
        "fig1" => fig1(&mut params, out),
        "qmc" => qmc(&mut params, out),
        "compare" => compare(&mut params, out),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }?;
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        parameters: params.values().clone(),
        seeds: report.seeds,
        started,
        finished: now(),
        outputs: report.outputs,
    };
    let name = manifest.write(out)?;
    log::info!("wrote {} and {}", manifest.outputs.join(", "), name);
    match report.failure {
        Some(msg) => Err(CliError::Runtime(msg)),
        None => Ok(()),
    }
}

fn lattice(params: &mut Params) -> Result<LatticeConfig, CliError> {
    let [sites, atoms, delta, kappa] = LATTICE_KEYS;
    let l = params.require(sites)?;
    let n = params.require(atoms)?;
    let d = params.or(delta, 1.0)?;
    let k = params.require(kappa)?;
    Ok(LatticeConfig::new(l, n, d, k)?)
}

fn occupation_header(sites: usize) -> Vec<String> {
    (0..sites).map(|k| format!("n_{k}")).collect()
}

fn classical(params: &mut Params, out: &Path) -> Result<Report, CliError> {
    let config = lattice(params)?;
    let shape = match params.or("seed_shape", "bump".to_string())?.as_str() {
        "bump" => SeedShape::GaussianBump {
            center: params.or("seed_center", config.sites / 2)?,
            width: params.or("seed_width", 2.0)?,
        },
        "noise" => SeedShape::UniformWithNoise {
            amplitude: params.or("noise_amplitude", 0.1)?,
            seed: params.or("noise_seed", 0u64)?,
        },
        other => return Err(CliError::Usage(format!("seed_shape must be `bump` or `noise`, got `{other}`"))),
    };
    let defaults = RelaxOptions::default();
    let options = RelaxOptions {
        tol: params.or("tol", defaults.tol)?,
        residual_tol: params.or("residual_tol", defaults.residual_tol)?,
        max_iter: params.or("max_iter", defaults.max_iter)?,
        dtau: params.get("dtau")?,
    };
    let result = imaginary_time_ground_state(&config, &shape.build(&config), &options)?;

    let mut profile = Table::new(&["k", "density", "re", "im"]);
    for (k, b) in result.field.amplitudes().iter().enumerate() {
        profile.row(&[k.to_string(), float(b.norm_sqr()), float(b.re), float(b.im)]);
    }
    let mut summary = Table::new(&["mu", "energy", "converged", "iterations", "residual"]);
    summary.row(&[
        float(result.mu),
        float(result.energy),
        result.converged.to_string(),
        result.iterations.to_string(),
        float(result.residual),
    ]);
    let failure = (!result.converged).then(|| {
        format!(
            "relaxation did not converge in {} iterations (residual {:e})",
            result.iterations, result.residual
        )
    });
    Ok(Report {
        outputs: vec![profile.write(out, "classical.csv")?, summary.write(out, "classical_summary.csv")?],
        failure,
        ..Report::default()
    })
}

fn exact(params: &mut Params, out: &Path) -> Result<Report, CliError> {
    let config = lattice(params)?;
    let basis = FockBasis::enumerate(&config)?;
    let h = HamiltonianMatrix::build(&basis);
    let (energies, dist) = match params.get::<f64>("beta")? {
        Some(beta) => {
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(CliError::Usage(format!("beta must be positive, got {beta}")));
            }
            let spectrum = full_spectrum(&h)?;
            let dist = thermal_from_spectrum(&spectrum, &basis, beta);
            (spectrum.eigenvalues, dist)
        }
        None => {
            let states = params.or("states", 2usize)?;
            let tol = params.or("degeneracy_tol", DEFAULT_DEGENERACY_TOL)?;
            let spectrum = ground_states(&h, states, tol)?;
            let dist = zero_temp_distribution(&spectrum, &basis)?;
            (spectrum.eigenvalues, dist)
        }
    };
    let mut header = vec!["index".to_string()];
    header.extend(occupation_header(config.sites));
    header.push("probability".into());
    let mut table = Table::new(&header);
    for (i, (state, p)) in dist.states.iter().zip(&dist.probabilities).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(state.occupations().iter().map(|n| n.to_string()));
        row.push(float(*p));
        table.row(&row);
    }
    let mut spectrum = Table::new(&["index", "energy"]);
    for (i, e) in energies.iter().enumerate() {
        spectrum.row(&[i.to_string(), float(*e)]);
    }
    Ok(Report {
        outputs: vec![
            table.write(out, "exact_distribution.csv")?,
            spectrum.write(out, "exact_spectrum.csv")?,
        ],
        ..Report::default()
    })
}

fn fig1(params: &mut Params, out: &Path) -> Result<Report, CliError> {
    let lambda = params.or("lambda", -2.309)?;
    let delta = params.or("delta", 1.0)?;
    let list = params.or("n_list", "8,16,32,64,128,256,512,1024".to_string())?;
    let atoms = parse_list::<usize>("n_list", &list)?;
    let scan = two_site_scan(&atoms, lambda, delta)?;

    let mut table = Table::new(&["N", "n", "n/N", "P_n", "sqrtN_Pn"]);
    let mut peaks = Table::new(&["N", "peak1", "peak2", "width1", "width2"]);
    let mut series = Vec::new();
    for d in &scan {
        for (n, x, scaled) in d.scaled() {
            table.row(&[d.atoms.to_string(), n.to_string(), float(x), float(d.probabilities[n]), float(scaled)]);
        }
        let stats = peak_statistics(&d.probabilities, d.atoms)?;
        let second = stats.peaks.get(1);
        peaks.row(&[
            d.atoms.to_string(),
            float(stats.peaks[0].position),
            float(second.map_or(f64::NAN, |p| p.position)),
            float(stats.peaks[0].width),
            float(second.map_or(f64::NAN, |p| p.width)),
        ]);
        series.push(Series {
            label: format!("N = {}", d.atoms),
            points: d.scaled().map(|(_, x, y)| (x, y)).collect(),
            style: Style::Line,
        });
    }
    let svg = chart(&format!("two-site statistics, Λ = {lambda}"), "n/N", "√N P_n", &series);
    Ok(Report {
        outputs: vec![
            table.write(out, "fig1.csv")?,
            peaks.write(out, "fig1_peaks.csv")?,
            write_file(out, "fig1.svg", &svg)?,
        ],
        ..Report::default()
    })
}

fn qmc(params: &mut Params, out: &Path) -> Result<Report, CliError> {
    let config = lattice(params)?;
    let beta = params.require("beta")?;
    let mut sampler = SamplerConfig::new(&config, beta);
    sampler.n_beta = params.or("n_beta", sampler.n_beta)?;
    sampler.thermalization_sweeps = params.or("thermalization", sampler.thermalization_sweeps)?;
    sampler.max_thermalization_sweeps = params.or("max_thermalization", sampler.max_thermalization_sweeps)?;
    sampler.stride = params.or("stride", sampler.stride)?;
    sampler.n_samples = params.or("samples", sampler.n_samples)?;
    sampler.rng = RngStream::new(params.or("seed", 0u64)?, 0);
    sampler.seeding = match params.or("seeding", "uniform".to_string())?.as_str() {
        "uniform" => Seeding::Uniform,
        "narrow" => Seeding::Narrow {
            center: params.or("seed_center", config.sites / 2)?,
            width: params.or("seed_width", 2.0)?,
        },
        other => return Err(CliError::Usage(format!("seeding must be `uniform` or `narrow`, got `{other}`"))),
    };
    sampler.winding_attempts = params.get("winding")?;
    sampler.symmetry_moves = params.or("symmetry_moves", true)?;
    sampler.sample_slice = params.or("sample_slice", 0usize)?;
    let chains: u64 = params.or("chains", 1u64)?;
    if chains == 0 {
        return Err(CliError::Usage("chains must be at least 1".into()));
    }
    sampler.validate(&config)?;

    let streams: Vec<RngStream> = (0..chains).map(|i| sampler.rng.for_chain(i)).collect();
    let results: Vec<QmcRunResult> = streams
        .par_iter()
        .map(|&rng| {
            let s = SamplerConfig { rng, ..sampler.clone() };
            run(&config, &s)
        })
        .collect::<Result<_, _>>()?;

    let mut sample_header = vec!["sample_id".to_string(), "chain".to_string()];
    sample_header.extend(occupation_header(config.sites));
    let mut samples = Table::new(&sample_header);
    let mut diagnostics = Table::new(&["sample_id", "chain", "energy"]);
    let mut summary = Table::new(&[
        "chain",
        "seed",
        "stream_id",
        "acceptance_rate",
        "winding_acceptance_rate",
        "energy_mean",
        "energy_error",
        "tau_int",
        "thermalization_sweeps",
        "settled",
        "trotter_accuracy",
    ]);
    let mut id = 0usize;
    for (chain, (r, rng)) in results.iter().zip(&streams).enumerate() {
        for (state, e) in r.samples.iter().zip(&r.diagnostics.energy_trace) {
            let mut row = vec![id.to_string(), chain.to_string()];
            row.extend(state.occupations().iter().map(|n| n.to_string()));
            samples.row(&row);
            diagnostics.row(&[id.to_string(), chain.to_string(), float(*e)]);
            id += 1;
        }
        let d = &r.diagnostics;
        summary.row(&[
            chain.to_string(),
            rng.seed.to_string(),
            rng.stream_id.to_string(),
            float(r.acceptance_rate),
            float(d.winding_acceptance_rate),
            float(d.energy.mean),
            float(d.energy.error),
            float(d.autocorrelation_time),
            d.thermalization.sweeps.to_string(),
            d.thermalization.settled.to_string(),
            float(d.trotter_accuracy),
        ]);
    }

    let all: Vec<NumberState> = results.iter().flat_map(|r| r.samples.iter().cloned()).collect();
    let mut hist_header = occupation_header(config.sites);
    hist_header.extend(["count".to_string(), "frequency".to_string()]);
    let mut hist = Table::new(&hist_header);
    for (state, count) in histogram(&all) {
        let mut row: Vec<String> = state.occupations().iter().map(|n| n.to_string()).collect();
        row.push(count.to_string());
        row.push(float(count as f64 / all.len() as f64));
        hist.row(&row);
    }

    Ok(Report {
        outputs: vec![
            samples.write(out, "qmc_samples.csv")?,
            diagnostics.write(out, "qmc_diagnostics.csv")?,
            hist.write(out, "qmc_histogram.csv")?,
            summary.write(out, "qmc_summary.csv")?,
        ],
        seeds: streams
            .iter()
            .enumerate()
            .map(|(i, s)| ChainSeed {
                chain: i as u64,
                seed: s.seed,
                stream_id: s.stream_id,
            })
            .collect(),
        failure: None,
    })
}

fn column(data: &CsvData, name: &str, path: &Path) -> Result<usize, CliError> {
    data.column(name)
        .ok_or_else(|| CliError::Usage(format!("{} has no `{name}` column", path.display())))
}

fn number<T: std::str::FromStr>(text: &str, path: &Path) -> Result<T, CliError> {
    text.parse()
        .map_err(|_| CliError::Usage(format!("{}: cannot parse `{text}`", path.display())))
}

fn compare(params: &mut Params, out: &Path) -> Result<Report, CliError> {
    let classical_path: PathBuf = params.require("classical")?;
    let samples_path: PathBuf = params.require("samples")?;

    let classical = CsvData::read(&classical_path)?;
    let density = column(&classical, "density", &classical_path)?;
    let reference: Vec<f64> = classical
        .rows
        .iter()
        .map(|r| number(&r[density], &classical_path))
        .collect::<Result<_, _>>()?;

    let samples = CsvData::read(&samples_path)?;
    let sites: Vec<usize> = (0..)
        .map_while(|k| samples.column(&format!("n_{k}")))
        .collect();
    if sites.is_empty() {
        return Err(CliError::Usage(format!("{} has no n_0 column", samples_path.display())));
    }
    let id_col = samples.column("sample_id");

    let mut table = Table::new(&["sample_id", "shift", "d", "score"]);
    let mut series = vec![Series {
        label: "classical".into(),
        points: reference.iter().enumerate().map(|(k, &n)| (k as f64, n)).collect(),
        style: Style::Scatter,
    }];
    for (i, row) in samples.rows.iter().enumerate() {
        let occ: Vec<usize> = sites
            .iter()
            .map(|&c| number(&row[c], &samples_path))
            .collect::<Result<_, _>>()?;
        let state = NumberState::new(occ);
        let a = align(&state, &reference)?;
        let id = id_col.map_or_else(|| i.to_string(), |c| row[c].clone());
        table.row(&[id.clone(), a.shift.to_string(), float(a.distance), float(soliton_score(&state))]);
        series.push(Series {
            label: format!("sample {id}, d = {:.1}", a.distance),
            points: a
                .aligned
                .occupations()
                .iter()
                .enumerate()
                .map(|(k, &n)| (k as f64, n as f64))
                .collect(),
            style: Style::Line,
        });
    }
    let svg = chart("aligned samples vs classical soliton", "site k", "n_k", &series);
    Ok(Report {
        outputs: vec![table.write(out, "compare.csv")?, write_file(out, "compare.svg", &svg)?],
        ..Report::default()
    })
}
