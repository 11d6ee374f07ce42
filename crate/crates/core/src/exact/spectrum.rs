//! Low-lying spectrum of the sparse Hamiltonian.
//!
//! Small problems go straight to a dense symmetric eigensolver. Larger ones
//! use Lanczos with full reorthogonalization, extracting one eigenpair at a
//! time and locking it, so degenerate levels are found with their full
//! multiplicity.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hamiltonian::HamiltonianMatrix;
use crate::error::{ConfigError, Error, Result};

/// Largest dimension handled by the dense solver.
pub const DENSE_LIMIT: usize = 2000;

/// Default relative degeneracy window, multiplied by max(δ, |κ|N).
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Relative degeneracy window used for flagging.
    pub degeneracy_tol: f64,
    /// Number of leading states within the window of E₀.
    pub degenerate_count: usize,
    /// False when every computed state fell inside the window, so the
    /// degenerate manifold might be larger than what was computed.
    pub degeneracy_complete: bool,
}

impl SpectralResult {
    fn new(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>, degeneracy_tol: f64, scale: f64, dim: usize) -> Self {
        let window = degeneracy_tol * scale;
        let e0 = eigenvalues[0];
        let degenerate_count = eigenvalues.iter().take_while(|&&e| e - e0 <= window).count();
        let degeneracy_complete = degenerate_count < eigenvalues.len() || eigenvalues.len() == dim;
        SpectralResult {
            eigenvalues,
            eigenvectors,
            degeneracy_tol,
            degenerate_count,
            degeneracy_complete,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Complete spectrum by dense diagonalization.
pub fn full_spectrum(h: &HamiltonianMatrix) -> Result<SpectralResult> {
    if h.dim() > DENSE_LIMIT {
        return Err(ConfigError::DimensionBudget {
            dimension: h.dim() as u128,
            budget: DENSE_LIMIT as u128,
        }
        .into());
    }
    let (values, vectors) = dense_eigen(h.to_dense());
    Ok(SpectralResult::new(
        values,
        vectors,
        DEFAULT_DEGENERACY_TOL,
        h.config().energy_scale(),
        h.dim(),
    ))
}

fn dense_eigen(m: DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// The `count` lowest eigenpairs; states within
/// `degeneracy_tol · max(δ, |κ|N)` of E₀ are flagged degenerate.
pub fn ground_states(h: &HamiltonianMatrix, count: usize, degeneracy_tol: f64) -> Result<SpectralResult> {
    if count == 0 {
        return Err(ConfigError::Solver("need at least one eigenpair".into()).into());
    }
    let count = count.min(h.dim());
    let scale = h.config().energy_scale();
    let (values, vectors) = if h.dim() <= DENSE_LIMIT {
        let (mut v, mut w) = dense_eigen(h.to_dense());
        v.truncate(count);
        w.truncate(count);
        (v, w)
    } else {
        lanczos_lowest(h, count, &LanczosOptions::default())?
    };
    Ok(SpectralResult::new(values, vectors, degeneracy_tol, scale, h.dim()))
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov dimension per restart.
    pub krylov: usize,
    pub max_restarts: usize,
    /// Convergence on ‖Hv − λv‖ relative to the norm estimate of H.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            krylov: 200,
            max_restarts: 50,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Removes the components along every vector in `basis` (twice, for
/// numerical safety of classical Gram-Schmidt).
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

/// Lowest eigenpair of H restricted to the orthogonal complement of
/// `locked`, by restarted Lanczos.
fn lanczos_one(
    h: &HamiltonianMatrix,
    locked: &[Vec<f64>],
    start: Vec<f64>,
    opts: &LanczosOptions,
    norm_h: f64,
) -> Result<(f64, Vec<f64>)> {
    let dim = h.dim();
    let free = dim - locked.len();
    let krylov = opts.krylov.min(free).max(1);
    let mut v0 = start;
    let mut last_residual = f64::INFINITY;

    for _restart in 0..=opts.max_restarts {
        project_out(&mut v0, locked);
        if normalize(&mut v0) == 0.0 {
            return Err(ConfigError::Solver("Lanczos start vector collapsed".into()).into());
        }
        let mut q: Vec<Vec<f64>> = vec![v0.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        let mut ritz = vec![1.0];

        for j in 0..krylov {
            h.apply(&q[j], &mut w);
            project_out(&mut w, locked);
            let a = dot(&q[j], &w);
            alpha.push(a);
            axpy(-a, &q[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &q[j - 1], &mut w);
            }
            project_out(&mut w, &q);
            project_out(&mut w, locked);
            let b = dot(&w, &w).sqrt();
            let last = b <= 1e-14 * norm_h || j + 1 == krylov;
            if !last && j % 10 != 9 {
                beta.push(b);
                q.push(w.iter().map(|x| x / b).collect());
                continue;
            }

            let m = alpha.len();
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let (_, vecs) = dense_eigen(t);
            let s = vecs[0].clone();
            let residual = b * s[m - 1].abs();
            ritz = s;

            if residual <= opts.tol * norm_h || last {
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            next.iter_mut().for_each(|x| *x /= b);
            q.push(next);
        }

        let mut v = vec![0.0; dim];
        for (coef, qi) in ritz.iter().zip(&q) {
            axpy(*coef, qi, &mut v);
        }
        project_out(&mut v, locked);
        normalize(&mut v);

        h.apply(&v, &mut w);
        let rq = dot(&v, &w);
        axpy(-rq, &v, &mut w);
        project_out(&mut w, locked);
        let true_residual = dot(&w, &w).sqrt();
        if true_residual <= opts.tol * norm_h {
            return Ok((rq, v));
        }
        last_residual = true_residual;
        v0 = v;
    }
    Err(Error::EigenNotConverged {
        iterations: opts.max_restarts * krylov,
        residual: last_residual,
    })
}

/// The `count` lowest eigenpairs by Lanczos with locking, finished with a
/// Rayleigh-Ritz rotation inside the locked subspace.
pub fn lanczos_lowest(
    h: &HamiltonianMatrix,
    count: usize,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = h.dim();
    let count = count.min(dim);
    let norm_h = h.norm_estimate().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let start: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, v) = lanczos_one(h, &locked, start, opts, norm_h)?;
        locked.push(v);
    }

    // Rayleigh-Ritz in span(locked): sorts and cleans up near-degenerate
    // mixing between locked vectors.
    let k = locked.len();
    let mut hv = vec![vec![0.0; dim]; k];
    for (v, out) in locked.iter().zip(hv.iter_mut()) {
        h.apply(v, out);
    }
    let mut proj = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            proj[(i, j)] = 0.5 * (dot(&locked[i], &hv[j]) + dot(&locked[j], &hv[i]));
        }
    }
    let (values, small) = dense_eigen(proj);
    let mut vectors = Vec::with_capacity(k);
    for s in &small {
        let mut v = vec![0.0; dim];
        for (coef, q) in s.iter().zip(&locked) {
            axpy(*coef, q, &mut v);
        }
        project_out(&mut v, &vectors);
        normalize(&mut v);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// ‖Hv − λv‖₂.
pub fn residual(h: &HamiltonianMatrix, value: f64, vector: &[f64]) -> f64 {
    let mut w = vec![0.0; h.dim()];
    h.apply(vector, &mut w);
    axpy(-value, vector, &mut w);
    dot(&w, &w).sqrt()
}
