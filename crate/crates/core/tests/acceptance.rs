//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report reaches the terminal; exits non-zero on failure.

use std::time::Instant;

use lattice_soliton::analysis::{align, peak_statistics, soliton_score};
use lattice_soliton::dnlse::{
    chemical_potential, classical_energy, default_real_time_step, imaginary_time_ground_state, real_time_evolve,
    RelaxOptions, SeedShape,
};
use lattice_soliton::exact::{thermal_distribution, two_site_scan, FockBasis, HamiltonianMatrix};
use lattice_soliton::qmc::{
    bond_hamiltonian, build_propagator_table, estimate_observables, histogram, run, Chain, SamplerConfig, Seeding,
};
use lattice_soliton::stats::binning_analysis;
use lattice_soliton::{ClassicalField, LatticeConfig, NumberState, RngStream};
use nalgebra::DMatrix;
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// 1. Imaginary-time relaxation of the dimer at Λ = −2.309 splits the atoms
/// 3:1 to 10⁻³ relative, and an energy scan over the split fraction puts the
/// exact 3:1 point at Λ = −4/√3.
fn classical_dimer_split() -> Outcome {
    let n = 1000;
    let c = LatticeConfig::from_coupling(2, n, 1.0, -2.309).unwrap();
    let seed = SeedShape::default_for(&c).build(&c);
    let r = imaginary_time_ground_state(&c, &seed, &RelaxOptions::default()).unwrap();
    let mut frac: Vec<f64> = r.field.densities().iter().map(|d| d / n as f64).collect();
    frac.sort_by(|a, b| b.total_cmp(a));
    let rel = ((frac[0] - 0.75) / 0.75).abs().max(((frac[1] - 0.25) / 0.25).abs());

    // Scan E(x) for b = (√(xN), √((1−x)N)) at Λ = −4/√3.
    let critical = LatticeConfig::from_coupling(2, n, 1.0, -4.0 / 3f64.sqrt()).unwrap();
    let steps = 200_000;
    let argmin = (0..=steps)
        .map(|i| 0.5 + 0.5 * i as f64 / steps as f64)
        .map(|x| {
            let f = ClassicalField::from_real(&[(x * n as f64).sqrt(), ((1.0 - x) * n as f64).sqrt()]);
            (x, classical_energy(&f, &critical).unwrap())
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0;
    outcome(
        r.converged && rel <= 1e-3 && (argmin - 0.75).abs() <= 1e-5,
        format!(
            "split ({:.6}, {:.6}), rel err {rel:.2e} (tol 1e-3), converged {}; scan minimum at Λ=-4/√3: x={argmin:.6}",
            frac[0], frac[1], r.converged
        ),
    )
}

/// 2. Two-site statistics at Λ = −2.309: peaks at ¼ and ¾ within 0.02 for
/// N = 1024, width(1024)/width(64) = ¼ within 20%.
fn fig1_scaling() -> Outcome {
    let scan = two_site_scan(&[64, 256, 1024], -2.309, 1.0).unwrap();
    let stats: Vec<_> = scan
        .iter()
        .map(|d| peak_statistics(&d.probabilities, d.atoms).unwrap())
        .collect();
    let big = &stats[2];
    let two_peaks = stats.iter().all(|s| !s.single_peak && s.peaks.len() == 2);
    let (lo, hi) = (big.peaks[0].position, big.peaks[1].position);
    let ratio = big.peaks[0].width / stats[0].peaks[0].width;
    let pass = two_peaks && (lo - 0.25).abs() <= 0.02 && (hi - 0.75).abs() <= 0.02 && (ratio - 0.25).abs() <= 0.05;
    let widths: Vec<String> = stats.iter().map(|s| format!("{:.5}", s.peaks[0].width)).collect();
    outcome(
        pass,
        format!(
            "N=1024 peaks {lo:.4}/{hi:.4} (tol 0.02), widths N=64,256,1024: {}, ratio {ratio:.4} (0.25 ± 20%)",
            widths.join(", ")
        ),
    )
}

/// 3. The converged L=16 soliton is stationary for t = 10/δ: moduli change by
/// ≤ 10⁻⁶ of the peak modulus and the phase advances uniformly as e^{−iμt}.
fn soliton_stationarity() -> Outcome {
    let c = LatticeConfig::new(16, 256, 1.0, -0.004).unwrap();
    let seed = SeedShape::default_for(&c).build(&c);
    let r = imaginary_time_ground_state(&c, &seed, &RelaxOptions::default()).unwrap();
    let b0 = &r.field;
    let t = 10.0;
    let bt = real_time_evolve(b0, &c, t, default_real_time_step(b0, &c)).unwrap();
    let peak = b0.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let modulus = bt
        .amplitudes()
        .iter()
        .zip(b0.amplitudes())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max)
        / peak;
    let rot = Complex64::from_polar(1.0, -r.mu * t);
    let phase = bt
        .amplitudes()
        .iter()
        .zip(b0.amplitudes())
        .map(|(a, b)| (a - rot * b).norm())
        .fold(0.0, f64::max)
        / peak;
    outcome(
        r.converged && modulus <= 1e-6 && phase <= 1e-6,
        format!("μ = {:.9}, max modulus change {modulus:.2e}, max deviation from e^(-iμt) b(0) {phase:.2e} (tol 1e-6 of peak)", r.mu),
    )
}

const ORACLE_SEED: u64 = 20_240_601;

/// 4. QMC histogram at L=4, N=4, κ/δ=−0.5, β=20/δ, M=10⁴ against the exact
/// thermal distribution: χ² ≤ dof + 3√(2·dof) after pooling bins with
/// expected count < 5, and every ⟨n_k⟩ within 3σ of N/L.
fn qmc_oracle() -> Outcome {
    let c = LatticeConfig::new(4, 4, 1.0, -0.5).unwrap();
    let beta = 20.0;
    let basis = FockBasis::enumerate(&c).unwrap();
    let exact = thermal_distribution(&HamiltonianMatrix::build(&basis), &basis, beta).unwrap();

    let mut s = SamplerConfig::new(&c, beta);
    s.n_samples = 10_000;
    s.stride = 40;
    s.rng = RngStream::new(ORACLE_SEED, 0);
    let r = run(&c, &s).unwrap();
    let m = r.samples.len() as f64;
    let counts = histogram(&r.samples);

    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (state, p) in exact.states.iter().zip(&exact.probabilities) {
        let e = p * m;
        let o = *counts.get(state).unwrap_or(&0) as f64;
        if e < 5.0 {
            pooled_obs += o;
            pooled_exp += e;
        } else {
            chi2 += (o - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_exp > 0.0 {
        chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    let dof = (bins - 1) as f64;
    let limit = dof + 3.0 * (2.0 * dof).sqrt();

    let site: Vec<Box<dyn Fn(&NumberState) -> f64>> = (0..4)
        .map(|k| Box::new(move |x: &NumberState| x[k] as f64) as Box<dyn Fn(&NumberState) -> f64>)
        .collect();
    let refs: Vec<&dyn Fn(&NumberState) -> f64> = site.iter().map(|f| f.as_ref()).collect();
    let means = estimate_observables(&r, &refs).unwrap();
    let uniform = means.iter().all(|e| (e.mean - 1.0).abs() <= 3.0 * e.error);
    let shown: Vec<String> = means.iter().map(|e| format!("{:.3}±{:.3}", e.mean, e.error)).collect();
    outcome(
        chi2 <= limit && uniform,
        format!(
            "χ² = {chi2:.2} on {dof} dof (limit {limit:.2}); ⟨n_k⟩ = [{}]; acceptance {:.3}, τ_int(E) = {:.2} samples",
            shown.join(", "),
            r.acceptance_rate,
            r.diagnostics.autocorrelation_time
        ),
    )
}

/// Second-quantized dense H_even / H_odd of the L=4 ring, independent of the
/// sampler's bond tables.
fn checkerboard_halves(basis: &FockBasis, config: &LatticeConfig) -> [DMatrix<f64>; 2] {
    let (l, dim) = (config.sites, basis.dim());
    let mut halves = [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)];
    for i in 0..dim {
        let occ = basis.occupations(i).to_vec();
        for (p, h) in halves.iter_mut().enumerate() {
            for a in (p..l).step_by(2) {
                let b = (a + 1) % l;
                for site in [a, b] {
                    let n = occ[site] as f64;
                    h[(i, i)] += 0.25 * config.kappa * n * (n - 1.0);
                }
                for (from, to) in [(a, b), (b, a)] {
                    if occ[from] == 0 {
                        continue;
                    }
                    let mut next = occ.clone();
                    next[from] -= 1;
                    next[to] += 1;
                    let j = basis.index_of(&next).unwrap();
                    h[(j, i)] -= 0.5 * config.delta * (occ[from] as f64 * next[to] as f64).sqrt();
                }
            }
        }
    }
    halves
}

fn spectral_exp(h: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let e = h.clone().symmetric_eigen();
    &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(|x| (-tau * x).exp())) * e.eigenvectors.transpose()
}

/// 5. Trotter order on the same system: the bias of ⟨n₀n₁⟩ against the exact
/// thermal value shrinks 4× per doubling of N_β. Each ratio r must satisfy
/// |r − 4| ≤ 3σ_r + 0.4 with σ_r ≤ 1; the 0.4 covers the higher-order
/// terms at the coarsest steps (exact Trotterized ratios 3.93, 4.32, 4.10).
fn trotter_order() -> Outcome {
    let c = LatticeConfig::new(4, 4, 1.0, -0.5).unwrap();
    let beta = 20.0;
    let basis = FockBasis::enumerate(&c).unwrap();
    let h = HamiltonianMatrix::build(&basis);
    let n01 = |occ: &[u32]| (0..4).map(|k| (occ[k] * occ[(k + 1) % 4]) as f64).sum::<f64>() / 4.0;
    let exact = thermal_distribution(&h, &basis, beta)
        .unwrap()
        .expectation(|s| (s[0] * s[1]) as f64);
    let halves = checkerboard_halves(&basis, &c);
    let diag: Vec<f64> = (0..basis.dim()).map(|i| n01(basis.occupations(i))).collect();

    let mut biases = Vec::new();
    let mut lines = Vec::new();
    let mut consistent = true;
    for (i, &n_beta) in [5usize, 10, 20, 40].iter().enumerate() {
        let dtau = beta / n_beta as f64;
        let step = spectral_exp(&halves[0], dtau) * spectral_exp(&halves[1], dtau);
        let rho = step.pow(n_beta as u32);
        let z = rho.trace();
        let trotter = (0..basis.dim()).map(|k| rho[(k, k)] * diag[k]).sum::<f64>() / z;

        let mut s = SamplerConfig::new(&c, beta);
        s.n_beta = n_beta;
        s.rng = RngStream::new(ORACLE_SEED + 1, i as u64);
        let mut chain = Chain::new(&c, &s).unwrap();
        chain.thermalize(&s).unwrap();
        // Autocorrelation grows with N_β; equal work per slice for the coarse
        // steps, extra sweeps for the fine ones.
        let sweeps = 8_000_000 / n_beta * (n_beta / 10).max(1);
        let series: Vec<f64> = (0..sweeps)
            .map(|_| {
                chain.sweep();
                chain.slice_average(n01)
            })
            .collect();
        let e = binning_analysis(&series);
        consistent &= (e.mean - trotter).abs() <= 4.0 * e.error;
        biases.push((e.mean - exact, e.error));
        lines.push(format!(
            "N_β={n_beta}: bias {:+.5}±{:.5} (Trotterized oracle {:+.5})",
            e.mean - exact,
            e.error,
            trotter - exact
        ));
    }
    let mut pass = consistent;
    for w in biases.windows(2) {
        let ((b1, s1), (b2, s2)) = (w[0], w[1]);
        let r = b1 / b2;
        let sr = r.abs() * ((s1 / b1).powi(2) + (s2 / b2).powi(2)).sqrt();
        pass &= sr <= 1.0 && (r - 4.0).abs() <= 3.0 * sr + 0.4;
        lines.push(format!("ratio {r:.2}±{sr:.2}"));
    }
    outcome(pass, lines.join("; "))
}

/// 6. Soliton regime: five samples at L=16, N=256, κ/δ=−0.004, β=100/δ with
/// narrow seeding. Every sample holds 256 atoms, at least four aligned ℓ²
/// distances lie in [5, 35], and every soliton score exceeds the 95th
/// percentile of κ=0 scores at identical L, N, β.
fn fig2_samples() -> Outcome {
    let c = LatticeConfig::new(16, 256, 1.0, -0.004).unwrap();
    let beta = 100.0;
    let classical = imaginary_time_ground_state(&c, &SeedShape::default_for(&c).build(&c), &RelaxOptions::default())
        .unwrap();
    let reference = classical.field.densities();

    let mut s = SamplerConfig::new(&c, beta);
    s.n_samples = 5;
    s.seeding = Seeding::Narrow { center: 8, width: 2.0 };
    s.rng = RngStream::new(ORACLE_SEED + 2, 0);
    let r = run(&c, &s).unwrap();
    let sums_ok = r.samples.iter().all(|x| x.total() == 256);
    let distances: Vec<f64> = r
        .samples
        .iter()
        .map(|x| align(x, &reference).unwrap().distance)
        .collect();
    let in_band = distances.iter().filter(|d| (5.0..=35.0).contains(*d)).count();
    let scores: Vec<f64> = r.samples.iter().map(soliton_score).collect();

    let free = LatticeConfig::new(16, 256, 1.0, 0.0).unwrap();
    let mut b = SamplerConfig::new(&free, beta);
    b.n_samples = 100;
    b.rng = RngStream::new(ORACLE_SEED + 3, 0);
    let baseline = run(&free, &b).unwrap();
    let mut base_scores: Vec<f64> = baseline.samples.iter().map(soliton_score).collect();
    base_scores.sort_by(f64::total_cmp);
    let p95 = base_scores[(0.95 * (base_scores.len() - 1) as f64).round() as usize];
    let scores_ok = scores.iter().all(|&x| x > p95);

    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(", ");
    outcome(
        sums_ok && in_band >= 4 && scores_ok,
        format!(
            "d = [{}] ({in_band}/5 in [5, 35]); scores [{}] vs κ=0 95th percentile {p95:.3}; acceptance {:.3}",
            fmt(&distances),
            scores.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
            r.acceptance_rate
        ),
    )
}

/// 7. Invariant suites in quantified form.
fn invariants() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    // Hamiltonian symmetry, exact entry match.
    for (l, n, kappa) in [(2, 9, -0.3), (5, 4, 0.7), (6, 6, -0.5)] {
        let basis = FockBasis::enumerate(&LatticeConfig::new(l, n, 1.0, kappa).unwrap()).unwrap();
        check("hamiltonian symmetry", HamiltonianMatrix::build(&basis).is_symmetric());
    }

    // Basis bijection, exhaustive up to D ≈ 10⁵.
    for (l, n) in [(4, 4), (8, 8), (10, 7)] {
        let basis = FockBasis::enumerate(&LatticeConfig::new(l, n, 1.0, 0.0).unwrap()).unwrap();
        let ok = (0..basis.dim()).all(|i| basis.index_of(basis.occupations(i)) == Some(i));
        check("basis bijection", ok);
    }

    // Norm and energy conservation of the DNLSE at the guideline step.
    let c = LatticeConfig::new(8, 40, 1.0, -0.3).unwrap();
    let seed = SeedShape::UniformWithNoise { amplitude: 0.3, seed: 7 }.build(&c);
    let (t, e0, n0) = (5.0, classical_energy(&seed, &c).unwrap(), seed.norm_sqr());
    let bt = real_time_evolve(&seed, &c, t, default_real_time_step(&seed, &c)).unwrap();
    check("norm conservation", (bt.norm_sqr() - n0).abs() <= 1e-10 * n0 * t);
    let e1 = classical_energy(&bt, &c).unwrap();
    check("energy conservation", ((e1 - e0) / e0).abs() <= 1e-8 * t);

    // Translation covariance of the relaxation and μ consistency.
    let c = LatticeConfig::new(12, 60, 1.0, -0.1).unwrap();
    let base = imaginary_time_ground_state(&c, &ClassicalField::gaussian_bump(&c, 3, 1.5), &RelaxOptions::default())
        .unwrap();
    let moved = imaginary_time_ground_state(&c, &ClassicalField::gaussian_bump(&c, 8, 1.5), &RelaxOptions::default())
        .unwrap();
    let dev = (0..12)
        .map(|k| (moved.field.amplitudes()[(k + 5) % 12].norm() - base.field.amplitudes()[k].norm()).abs())
        .fold(0.0, f64::max);
    check("translation covariance", dev <= 1e-8);
    let mu = chemical_potential(&base.field, &c).unwrap();
    check("mu consistency", ((mu - base.mu) / base.mu).abs() <= 1e-8);

    // Slice particle conservation and plaquette positivity along a chain.
    for (l, n, kappa) in [(4, 4, -0.5), (2, 11, -0.2), (8, 12, 0.3)] {
        let c = LatticeConfig::new(l, n, 1.0, kappa).unwrap();
        let mut s = SamplerConfig::new(&c, 2.0);
        s.n_beta = 10;
        s.rng = RngStream::new(3, 0);
        let mut chain = Chain::new(&c, &s).unwrap();
        let mut ok = true;
        for _ in 0..200 {
            chain.sweep();
            ok &= chain.check_invariants().is_ok();
        }
        check("slice conservation and positivity", ok);
    }

    // Propagator positivity, all blocks of the oracle and soliton settings.
    for (l, n, kappa, dtau) in [(4, 4, -0.5, 0.05), (4, 4, -0.5, 4.0), (16, 24, -0.004, 0.05), (2, 24, -0.1, 0.1)] {
        let c = LatticeConfig::new(l, n, 1.0, kappa).unwrap();
        let mut table = build_propagator_table(&c, dtau).unwrap();
        let ok = (0..=n).all(|m| table.matrix(m).iter().all(|&g| g > 0.0));
        check("propagator positivity", ok);
        let h = bond_hamiltonian(&c, 1);
        check("bond hamiltonian symmetry", h == h.transpose());
    }

    // Align translation invariance, exhaustive shifts for L ≤ 32.
    for l in [2usize, 5, 16, 32] {
        let sample = NumberState::new((0..l).map(|k| (k * 7 + 3) % 11).collect());
        let reference: Vec<f64> = (0..l).map(|k| ((k * 5) % 9) as f64 * 1.7).collect();
        let d0 = align(&sample, &reference).unwrap().distance;
        let ok = (0..l).all(|s| align(&sample.shifted(s), &reference).unwrap().distance == d0);
        check("align translation invariance", ok);
    }

    let pass = failures.is_empty();
    outcome(
        pass,
        if pass {
            "hamiltonian symmetry, basis bijection, norm/energy conservation, translation covariance, μ consistency, slice conservation, propagator positivity, align invariance".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 classical dimer split", classical_dimer_split),
        ("2 two-site peak scaling", fig1_scaling),
        ("3 soliton stationarity", soliton_stationarity),
        ("4 QMC vs exact distribution", qmc_oracle),
        ("5 Trotter order", trotter_order),
        ("6 sampled solitons", fig2_samples),
        ("7 invariant suites", invariants),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] criterion {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
