//! `lattice-soliton`: batch driver for the classical, exact and QMC engines.
//!
//! Exit codes: 0 success, 1 runtime or convergence failure, 2 usage or
//! configuration error.

mod commands;
mod manifest;
mod output;
mod params;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lattice_soliton::{ConfigError, Error};

use crate::manifest::RunManifest;
use crate::params::Params;

/// Default output directory when `--out` is not given.
pub const OUT_ENV: &str = "LATTICE_SOLITON_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "lattice-soliton", version, about = "Lattice solitons in the Bose-Hubbard ring")]
struct Cli {
    /// Output directory; defaults to $LATTICE_SOLITON_OUT, then `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Re-run the command recorded in a manifest.
    #[arg(long, value_name = "MANIFEST")]
    from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical soliton by imaginary-time relaxation of the DNLSE.
    Classical(ClassicalArgs),
    /// Exact number-state distribution (ground-state mixture or thermal).
    Exact(ExactArgs),
    /// Two-site √N·P_n curves over a list of atom numbers.
    Fig1(Fig1Args),
    /// World-line QMC samples of the number state.
    Qmc(QmcArgs),
    /// Align sampled states to a classical profile.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct LatticeArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    atoms: Option<usize>,
    /// Tunneling δ [default: 1].
    #[arg(long)]
    delta: Option<f64>,
    /// On-site interaction κ.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
}

macro_rules! flags {
    ($src:expr; $($field:ident),* $(,)?) => {
        vec![$((stringify!($field), $src.$field.as_ref().map(|v| v.to_string()))),*]
    };
}

impl LatticeArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        flags!(self; sites, atoms, delta, kappa)
    }
}

#[derive(Args, Debug)]
struct ClassicalArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// `bump` (Gaussian at --seed-center) or `noise` (perturbed uniform).
    #[arg(long)]
    seed_shape: Option<String>,
    #[arg(long)]
    seed_center: Option<usize>,
    #[arg(long)]
    seed_width: Option<f64>,
    #[arg(long)]
    noise_amplitude: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Relative energy-change tolerance per step.
    #[arg(long)]
    tol: Option<f64>,
    /// Stationarity residual tolerance.
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    dtau: Option<f64>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Thermal distribution at this β; without it the degenerate ground
    /// manifold is used.
    #[arg(long)]
    beta: Option<f64>,
    /// Lowest states to compute for the ground manifold.
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    degeneracy_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct Fig1Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Λ = Nκ/δ [default: -2.309].
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated atom numbers.
    #[arg(long)]
    n_list: Option<String>,
}

#[derive(Args, Debug)]
struct QmcArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long)]
    beta: Option<f64>,
    /// Trotter steps; the grid has twice as many slices.
    #[arg(long)]
    n_beta: Option<usize>,
    /// Minimum thermalization sweeps.
    #[arg(long)]
    thermalization: Option<usize>,
    #[arg(long)]
    max_thermalization: Option<usize>,
    /// Sweeps between samples.
    #[arg(long)]
    stride: Option<usize>,
    /// Samples per chain.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent chains, run in parallel on consecutive RNG streams.
    #[arg(long)]
    chains: Option<u64>,
    /// `uniform` or `narrow`.
    #[arg(long)]
    seeding: Option<String>,
    #[arg(long)]
    seed_center: Option<usize>,
    #[arg(long)]
    seed_width: Option<f64>,
    /// Winding-move attempts per sweep.
    #[arg(long)]
    winding: Option<usize>,
    #[arg(long)]
    symmetry_moves: Option<bool>,
    #[arg(long)]
    sample_slice: Option<usize>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile CSV written by `classical`.
    #[arg(long)]
    classical: Option<PathBuf>,
    /// Samples CSV written by `qmc`.
    #[arg(long)]
    samples: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classical(_) => "classical",
            Command::Exact(_) => "exact",
            Command::Fig1(_) => "fig1",
            Command::Qmc(_) => "qmc",
            Command::Compare(_) => "compare",
        }
    }

    fn config_file(&self) -> Option<&Path> {
        match self {
            Command::Classical(a) => a.lattice.config.as_deref(),
            Command::Exact(a) => a.lattice.config.as_deref(),
            Command::Fig1(a) => a.config.as_deref(),
            Command::Qmc(a) => a.lattice.config.as_deref(),
            Command::Compare(a) => a.config.as_deref(),
        }
    }

    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        match self {
            Command::Classical(a) => {
                let mut f = a.lattice.flags();
                f.extend(flags!(a; seed_shape, seed_center, seed_width, noise_amplitude, noise_seed, tol, residual_tol, max_iter, dtau));
                f
            }
            Command::Exact(a) => {
                let mut f = a.lattice.flags();
                f.extend(flags!(a; beta, states, degeneracy_tol));
                f
            }
            Command::Fig1(a) => flags!(a; lambda, delta, n_list),
            Command::Qmc(a) => {
                let mut f = a.lattice.flags();
                f.extend(flags!(a; beta, n_beta, thermalization, max_thermalization, stride, samples, seed, chains, seeding, seed_center, seed_width, winding, symmetry_moves, sample_slice));
                f
            }
            Command::Compare(a) => vec![
                ("classical", a.classical.as_ref().map(|p| p.display().to_string())),
                ("samples", a.samples.as_ref().map(|p| p.display().to_string())),
            ],
        }
    }
}

fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let out = output_dir(cli.out);
    let (name, params) = match (cli.command, cli.from_manifest) {
        (Some(cmd), None) => {
            let name = cmd.name();
            let allowed = commands::allowed_keys(name).expect("every subcommand has a key list");
            (name.to_string(), Params::resolve(allowed, cmd.config_file(), cmd.flags())?)
        }
        (None, Some(path)) => {
            let m = RunManifest::read(&path)?;
            let allowed = commands::allowed_keys(&m.command)
                .ok_or_else(|| CliError::Usage(format!("manifest names unknown command `{}`", m.command)))?;
            (m.command, Params::from_map(allowed, m.parameters)?)
        }
        _ => return Err(CliError::Usage("expected a subcommand or --from-manifest".into())),
    };
    commands::execute(&name, params, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Runtime(_) => 1,
            })
        }
    }
}
