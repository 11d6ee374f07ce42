use nalgebra::DMatrix;

use super::basis::FockBasis;
use crate::lattice::LatticeConfig;

/// Sparse symmetric Bose-Hubbard Hamiltonian in a [`FockBasis`].
///
/// Off-diagonal entries are stored row-wise (CSR) with columns ascending;
/// the diagonal is kept separately.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    config: LatticeConfig,
    diagonal: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl HamiltonianMatrix {
    /// Assembles
    /// H = Σ_k [−(δ/2)(b†_{k+1}b_k + b†_{k−1}b_k) + (κ/2) n_k(n_k−1)].
    ///
    /// Every directed hop k → k±1 contributes −(δ/2)√(n_k(n_{k±1}+1)); hops
    /// reaching the same target state are summed, which for L = 2 doubles
    /// the two-site hopping to −δ.
    pub fn build(basis: &FockBasis) -> Self {
        let config = *basis.config();
        let l = config.sites;
        let dim = basis.dim();
        let half = 0.5 * config.delta;

        let mut diagonal = Vec::with_capacity(dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);

        let mut target = vec![0u32; l];
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * l);
        for i in 0..dim {
            let occ = basis.occupations(i);
            let pairs: u64 = occ.iter().map(|&n| n as u64 * (n as u64).saturating_sub(1)).sum();
            diagonal.push(0.5 * config.kappa * pairs as f64);

            row.clear();
            for k in 0..l {
                if occ[k] == 0 {
                    continue;
                }
                for dir in [1isize, -1] {
                    let j = config.neighbor(k, dir);
                    target.copy_from_slice(occ);
                    target[k] -= 1;
                    target[j] += 1;
                    let col = basis
                        .index_of(&target)
                        .expect("hop preserves the atom number");
                    // Exact integer product under the root keeps (i,j) and (j,i)
                    // bit-identical.
                    let amp = ((occ[k] as u64) * (occ[j] as u64 + 1)) as f64;
                    row.push((col, -half * amp.sqrt()));
                }
            }
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter().peekable();
            while let Some(&(c, mut v)) = iter.next() {
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }

        HamiltonianMatrix {
            config,
            diagonal,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Off-diagonal `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// y = H x, summed in a fixed order.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.dim() {
            let mut acc = self.diagonal[i] * x[i];
            for (c, v) in self.row(i) {
                acc += v * x[c];
            }
            y[i] = acc;
        }
    }

    /// Row-sum (Gershgorin) bound on the spectral norm.
    pub fn norm_estimate(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.diagonal[i].abs() + self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_row_off_diagonals(&self) -> usize {
        (0..self.dim())
            .map(|i| self.row_ptr[i + 1] - self.row_ptr[i])
            .max()
            .unwrap_or(0)
    }

    /// True when every stored (i, j, v) has a bit-identical (j, i, v).
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = self.diagonal[i];
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}
