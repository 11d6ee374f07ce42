//! Classical lattice dynamics: the discrete nonlinear Schrödinger equation
//!
//! ```text
//! i dbₖ/dt = −(δ/2)(bₖ₊₁ + bₖ₋₁) + κ|bₖ|² bₖ
//! ```
//!
//! on the periodic ring, integrated with classical RK4 in real time and in
//! imaginary time (with renormalization to N) to relax onto the classical
//! ground state. Neighbor indices are always reduced mod L, so for L = 2 both
//! neighbors are the same site and the effective two-site hopping is −δ.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ConfigError, Error, Result};
use crate::lattice::{ClassicalField, LatticeConfig};

/// A stationary state of the DNLSE together with its chemical potential.
#[derive(Debug, Clone)]
pub struct SolitonResult {
    pub field: ClassicalField,
    /// Chemical potential μ: the stationary state evolves as e^{−iμt}.
    pub mu: f64,
    /// Classical energy H/ħ.
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// ‖F(b) − μb‖₂ at the returned field.
    pub residual: f64,
}

/// Settings for the imaginary-time relaxation.
#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    /// Stop once the relative energy change per unit τ drops below this.
    pub tol: f64,
    /// Also require ‖F − μb‖₂ ≤ residual_tol · ‖b‖₂ · max(δ, |κ|N).
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Imaginary-time step; `None` picks 0.02 / max(δ, |κ|N/L).
    pub dtau: Option<f64>,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            tol: 1e-12,
            residual_tol: 1e-10,
            max_iter: 10_000_000,
            dtau: None,
        }
    }
}

/// Initial field for the relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedShape {
    /// Gaussian bump; pins the soliton at `center`.
    GaussianBump { center: usize, width: f64 },
    /// Uniform field with a small random complex perturbation, for
    /// spontaneous localization.
    UniformWithNoise { amplitude: f64, seed: u64 },
}

impl SeedShape {
    /// Width-2 bump centred at site ⌊L/2⌋.
    pub fn default_for(config: &LatticeConfig) -> Self {
        SeedShape::GaussianBump {
            center: config.sites / 2,
            width: 2.0,
        }
    }

    pub fn build(&self, config: &LatticeConfig) -> ClassicalField {
        match *self {
            SeedShape::GaussianBump { center, width } => {
                ClassicalField::gaussian_bump(config, center % config.sites, width)
            }
            SeedShape::UniformWithNoise { amplitude, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let base = (config.atoms as f64 / config.sites as f64).sqrt();
                let amps = (0..config.sites)
                    .map(|_| {
                        let re: f64 = rng.random_range(-1.0..1.0);
                        let im: f64 = rng.random_range(-1.0..1.0);
                        Complex64::new(base, 0.0) + amplitude * base * Complex64::new(re, im)
                    })
                    .collect();
                let mut f = ClassicalField::new(amps);
                f.normalize_to(config.atoms as f64);
                f
            }
        }
    }
}

fn check_length(field: &ClassicalField, config: &LatticeConfig) -> Result<()> {
    if field.sites() != config.sites {
        return Err(ConfigError::LengthMismatch {
            expected: config.sites,
            found: field.sites(),
        }
        .into());
    }
    Ok(())
}

/// F_k = ∂H/∂b*_k = −(δ/2)(b_{k+1} + b_{k−1}) + κ|b_k|² b_k, written into `out`.
fn force_into(b: &[Complex64], config: &LatticeConfig, out: &mut [Complex64]) {
    let half = 0.5 * config.delta;
    for k in 0..b.len() {
        let right = b[config.neighbor(k, 1)];
        let left = b[config.neighbor(k, -1)];
        out[k] = -half * (right + left) + config.kappa * b[k].norm_sqr() * b[k];
    }
}

/// The right-hand side F(b) of the DNLSE, i ḃ = F(b).
pub fn hamiltonian_force(field: &ClassicalField, config: &LatticeConfig) -> Result<Vec<Complex64>> {
    check_length(field, config)?;
    let mut out = vec![Complex64::new(0.0, 0.0); field.sites()];
    force_into(field.amplitudes(), config, &mut out);
    Ok(out)
}

/// H/ħ = Σ_k [−(δ/2)(b*_{k+1}b_k + b*_{k−1}b_k) + (κ/2)|b_k|⁴].
pub fn classical_energy(field: &ClassicalField, config: &LatticeConfig) -> Result<f64> {
    check_length(field, config)?;
    Ok(energy_of(field.amplitudes(), config))
}

fn energy_of(b: &[Complex64], config: &LatticeConfig) -> f64 {
    let half = 0.5 * config.delta;
    let mut e = 0.0;
    for k in 0..b.len() {
        let right = b[config.neighbor(k, 1)];
        let left = b[config.neighbor(k, -1)];
        e += -half * (right.conj() * b[k] + left.conj() * b[k]).re;
        let n = b[k].norm_sqr();
        e += 0.5 * config.kappa * n * n;
    }
    e
}

fn rayleigh_quotient(b: &[Complex64], force: &[Complex64]) -> f64 {
    let num: f64 = b.iter().zip(force).map(|(x, f)| (x.conj() * f).re).sum();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    num / den
}

/// μ = Σ_k b*_k F_k / Σ_k |b_k|², the least-squares eigenvalue of F(b) ≈ μ b.
pub fn chemical_potential(field: &ClassicalField, config: &LatticeConfig) -> Result<f64> {
    let force = hamiltonian_force(field, config)?;
    Ok(rayleigh_quotient(field.amplitudes(), &force))
}

/// ‖F(b) − μ b‖₂.
pub fn stationarity_residual(field: &ClassicalField, config: &LatticeConfig, mu: f64) -> Result<f64> {
    let force = hamiltonian_force(field, config)?;
    Ok(residual_of(field.amplitudes(), &force, mu))
}

fn residual_of(b: &[Complex64], force: &[Complex64], mu: f64) -> f64 {
    b.iter()
        .zip(force)
        .map(|(x, f)| (f - mu * x).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Frequency scale δ + |κ|·max_k|b_k|², a bound on the local rotation rate.
fn frequency_scale(b: &[Complex64], config: &LatticeConfig) -> f64 {
    let peak = b.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    config.delta + config.kappa.abs() * peak
}

/// Default real-time step, 0.01 / (δ + |κ| max|b|²).
pub fn default_real_time_step(field: &ClassicalField, config: &LatticeConfig) -> f64 {
    0.01 / frequency_scale(field.amplitudes(), config)
}

/// Default imaginary-time step, 0.02 / max(δ, |κ|N/L).
pub fn default_imaginary_time_step(config: &LatticeConfig) -> f64 {
    let per_site = config.kappa.abs() * config.atoms as f64 / config.sites as f64;
    0.02 / config.delta.max(per_site)
}

/// Scratch space for one RK4 step.
struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step<F>(&mut self, b: &mut [Complex64], h: f64, mut rhs: F)
    where
        F: FnMut(&[Complex64], &mut [Complex64]),
    {
        rhs(b, &mut self.k1);
        for i in 0..b.len() {
            self.tmp[i] = b[i] + 0.5 * h * self.k1[i];
        }
        rhs(&self.tmp, &mut self.k2);
        for i in 0..b.len() {
            self.tmp[i] = b[i] + 0.5 * h * self.k2[i];
        }
        rhs(&self.tmp, &mut self.k3);
        for i in 0..b.len() {
            self.tmp[i] = b[i] + h * self.k3[i];
        }
        rhs(&self.tmp, &mut self.k4);
        for i in 0..b.len() {
            b[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates i ḃ = F(b) for a duration `t` with RK4 steps no longer than `dt`.
pub fn real_time_evolve(
    field: &ClassicalField,
    config: &LatticeConfig,
    t: f64,
    dt: f64,
) -> Result<ClassicalField> {
    check_length(field, config)?;
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(ConfigError::Solver(format!("need dt > 0 and t >= 0, got dt={dt}, t={t}")).into());
    }
    let mut b = field.amplitudes().to_vec();
    let steps = (t / dt).ceil().max(if t > 0.0 { 1.0 } else { 0.0 }) as usize;
    if steps == 0 {
        return Ok(field.clone());
    }
    let h = t / steps as f64;
    if h * frequency_scale(&b, config) > 0.1 {
        log::warn!(
            "real-time step {h} exceeds the stability guideline 0.1 / {}",
            frequency_scale(&b, config)
        );
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let mut rk = Rk4::new(b.len());
    for step in 0..steps {
        rk.step(&mut b, h, |x, out| {
            force_into(x, config, out);
            out.iter_mut().for_each(|f| *f *= minus_i);
        });
        if b.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NonFinite {
                time: (step + 1) as f64 * h,
            });
        }
    }
    Ok(ClassicalField::new(b))
}

/// One renormalized imaginary-time step of length `dtau`.
///
/// The flow is ḃ = −(F(b) − μ(b) b): the chemical potential is subtracted so
/// a stationary state is an exact fixed point of the discrete map and the
/// renormalization only absorbs the O(dτ⁵) truncation.
pub fn imaginary_time_step(field: &mut ClassicalField, config: &LatticeConfig, dtau: f64) -> Result<()> {
    check_length(field, config)?;
    let mut rk = Rk4::new(field.sites());
    relax_step(field, config, dtau, &mut rk);
    if field
        .amplitudes()
        .iter()
        .any(|x| !x.re.is_finite() || !x.im.is_finite())
    {
        return Err(Error::NonFinite { time: dtau });
    }
    Ok(())
}

fn relax_step(field: &mut ClassicalField, config: &LatticeConfig, dtau: f64, rk: &mut Rk4) {
    rk.step(field.amplitudes_mut(), dtau, |x, out| {
        force_into(x, config, out);
        let mu = rayleigh_quotient(x, out);
        for (f, b) in out.iter_mut().zip(x) {
            *f = -(*f - mu * b);
        }
    });
    field.normalize_to(config.atoms as f64);
}

/// Relaxes `seed` in imaginary time onto the classical ground state.
///
/// Returns the best field found even when `max_iter` is exhausted, with
/// `converged = false`.
pub fn imaginary_time_ground_state(
    config: &LatticeConfig,
    seed: &ClassicalField,
    options: &RelaxOptions,
) -> Result<SolitonResult> {
    let config = config.validate()?;
    check_length(seed, &config)?;
    let dtau = options.dtau.unwrap_or_else(|| default_imaginary_time_step(&config));
    if !(dtau > 0.0) {
        return Err(ConfigError::Solver(format!("imaginary-time step must be positive, got {dtau}")).into());
    }
    let n = config.atoms as f64;
    let mut field = seed.clone();
    field.normalize_to(n);
    if field.norm_sqr() == 0.0 {
        return Err(ConfigError::Solver("seed field is identically zero".into()).into());
    }
    let res_scale = n.sqrt() * config.energy_scale();
    let mut force = vec![Complex64::new(0.0, 0.0); config.sites];
    let mut rk = Rk4::new(config.sites);
    let mut energy = energy_of(field.amplitudes(), &config);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iter {
        relax_step(&mut field, &config, dtau, &mut rk);
        iterations += 1;
        if field.amplitudes().iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NonFinite {
                time: iterations as f64 * dtau,
            });
        }
        let next = energy_of(field.amplitudes(), &config);
        let rel_rate = (next - energy).abs() / (dtau * next.abs().max(f64::MIN_POSITIVE));
        energy = next;
        if rel_rate < options.tol {
            force_into(field.amplitudes(), &config, &mut force);
            let mu = rayleigh_quotient(field.amplitudes(), &force);
            if residual_of(field.amplitudes(), &force, mu) <= options.residual_tol * res_scale {
                converged = true;
                break;
            }
        }
    }

    force_into(field.amplitudes(), &config, &mut force);
    let mu = rayleigh_quotient(field.amplitudes(), &force);
    let residual = residual_of(field.amplitudes(), &force, mu);
    if !converged {
        log::warn!("imaginary-time relaxation stopped after {iterations} steps without converging");
    }
    Ok(SolitonResult {
        field,
        mu,
        energy,
        iterations,
        converged,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(l: usize, n: usize, delta: f64, kappa: f64) -> LatticeConfig {
        LatticeConfig::new(l, n, delta, kappa).unwrap()
    }

    /// Term-by-term evaluation of the classical Hamiltonian, written
    /// independently of the production loop.
    fn energy_oracle(b: &[Complex64], c: &LatticeConfig) -> f64 {
        let l = b.len();
        let mut hop = Complex64::new(0.0, 0.0);
        let mut int = 0.0;
        for k in 0..l {
            let kp = (k + 1) % l;
            let km = (k + l - 1) % l;
            hop += b[kp].conj() * b[k];
            hop += b[km].conj() * b[k];
            int += b[k].norm_sqr().powi(2);
        }
        -0.5 * c.delta * hop.re + 0.5 * c.kappa * int
    }

    #[test]
    fn uniform_noninteracting_energy() {
        let c = cfg(7, 21, 1.3, 0.0);
        let e = classical_energy(&ClassicalField::uniform(&c), &c).unwrap();
        assert_relative_eq!(e, -1.3 * 21.0, max_relative = 1e-13);
    }

    #[test]
    fn single_site_energy() {
        let c = cfg(5, 10, 1.0, -1.0);
        let mut amps = vec![0.0; 5];
        amps[0] = 10f64.sqrt();
        let e = classical_energy(&ClassicalField::from_real(&amps), &c).unwrap();
        assert_relative_eq!(e, -50.0, max_relative = 1e-13);
    }

    #[test]
    fn dimer_energy_matches_closed_form_and_term_sum() {
        let n: f64 = 40.0;
        let kappa = -0.07;
        let c = cfg(2, 40, 1.0, kappa);
        let f = ClassicalField::from_real(&[(0.75 * n).sqrt(), (0.25 * n).sqrt()]);
        let closed = -2.0 * n * 3f64.sqrt() / 4.0 + 0.5 * kappa * (9.0 * n * n / 16.0 + n * n / 16.0);
        let e = classical_energy(&f, &c).unwrap();
        assert_relative_eq!(e, closed, max_relative = 1e-13);
        assert_relative_eq!(e, energy_oracle(f.amplitudes(), &c), max_relative = 1e-13);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let c = cfg(4, 4, 1.0, 0.0);
        let f = ClassicalField::from_real(&[1.0, 1.0]);
        assert!(classical_energy(&f, &c).is_err());
    }

    #[test]
    fn uniform_state_rotates_with_global_phase() {
        let c = cfg(6, 12, 1.0, 0.0);
        let f0 = ClassicalField::uniform(&c);
        let t = 3.7;
        let f = real_time_evolve(&f0, &c, t, 1e-3).unwrap();
        let expected = Complex64::from_polar(1.0, c.delta * t);
        for (a, b) in f.amplitudes().iter().zip(f0.amplitudes()) {
            assert!((a - b * expected).norm() < 1e-10);
        }
    }

    #[test]
    fn dimer_rabi_oscillation() {
        let c = cfg(2, 1, 1.0, 0.0);
        let f0 = ClassicalField::from_real(&[1.0, 0.0]);
        for &t in &[0.3, 1.0, 2.5, 7.0] {
            let f = real_time_evolve(&f0, &c, t, 1e-3).unwrap();
            assert!((f.amplitudes()[0].norm_sqr() - t.cos().powi(2)).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn repulsive_relaxes_to_uniform() {
        let c = cfg(8, 40, 1.0, 0.3);
        let seed = SeedShape::default_for(&c).build(&c);
        let r = imaginary_time_ground_state(&c, &seed, &RelaxOptions::default()).unwrap();
        assert!(r.converged);
        for d in r.field.densities() {
            assert!((d - 5.0).abs() < 1e-8);
        }
    }

    #[test]
    fn imaginary_time_energy_is_monotone() {
        let c = cfg(16, 256, 1.0, -0.004);
        let mut f = SeedShape::default_for(&c).build(&c);
        let dtau = default_imaginary_time_step(&c);
        let mut e = classical_energy(&f, &c).unwrap();
        for _ in 0..5000 {
            imaginary_time_step(&mut f, &c, dtau).unwrap();
            let next = classical_energy(&f, &c).unwrap();
            assert!(next <= e + 1e-13 * e.abs(), "{next} > {e}");
            e = next;
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let c = cfg(16, 256, 1.0, -0.004);
        let seed = SeedShape::default_for(&c).build(&c);
        let opts = RelaxOptions {
            max_iter: 10,
            ..RelaxOptions::default()
        };
        let r = imaginary_time_ground_state(&c, &seed, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 10);
    }

    #[test]
    fn returned_mu_minimizes_residual() {
        let c = cfg(16, 256, 1.0, -0.004);
        let seed = SeedShape::default_for(&c).build(&c);
        let r = imaginary_time_ground_state(&c, &seed, &RelaxOptions::default()).unwrap();
        let base = stationarity_residual(&r.field, &c, r.mu).unwrap();
        for eps in [1e-6, 1e-4, 1e-2] {
            assert!(stationarity_residual(&r.field, &c, r.mu + eps).unwrap() > base);
            assert!(stationarity_residual(&r.field, &c, r.mu - eps).unwrap() > base);
        }
        // Independent least-squares fit over a fine μ grid.
        let grid_best = (-2000..=2000)
            .map(|i| r.mu + i as f64 * 1e-9 * r.mu.abs())
            .min_by(|a, b| {
                stationarity_residual(&r.field, &c, *a)
                    .unwrap()
                    .total_cmp(&stationarity_residual(&r.field, &c, *b).unwrap())
            })
            .unwrap();
        assert!((grid_best - r.mu).abs() <= 1e-8 * r.mu.abs());
    }

    #[test]
    fn uniform_noise_seed_is_normalized() {
        let c = cfg(10, 30, 1.0, -0.1);
        let f = SeedShape::UniformWithNoise {
            amplitude: 1e-3,
            seed: 3,
        }
        .build(&c);
        assert!((f.norm_sqr() - 30.0).abs() < 1e-12);
    }
}
