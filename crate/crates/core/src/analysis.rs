//! Post-processing of sampled number states: cyclic alignment against the
//! classical soliton, two-site peak statistics and a localization score.

use crate::error::{ConfigError, Result};
use crate::lattice::NumberState;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// Cyclic shift s such that `aligned_k = sample_{k+s mod L}`.
    pub shift: usize,
    /// ℓ² distance [Σ_k (n_k^Q − n_k^C)²]^{1/2} after the shift.
    pub distance: f64,
    pub aligned: NumberState,
}

fn shifted_distance_sqr(sample: &[usize], reference: &[f64], shift: usize) -> f64 {
    let l = sample.len();
    reference
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let d = sample[(k + shift) % l] as f64 - r;
            d * d
        })
        .sum()
}

/// Translates `sample` around the ring to minimize its ℓ² distance to the
/// real-valued `reference` occupations. Ties go to the smallest shift.
pub fn align(sample: &NumberState, reference: &[f64]) -> Result<AlignmentResult> {
    let occ = sample.occupations();
    if occ.len() != reference.len() {
        return Err(ConfigError::LengthMismatch {
            expected: reference.len(),
            found: occ.len(),
        }
        .into());
    }
    let mut best = (0, f64::INFINITY);
    for shift in 0..occ.len() {
        let d2 = shifted_distance_sqr(occ, reference, shift);
        if d2 < best.1 {
            best = (shift, d2);
        }
    }
    Ok(AlignmentResult {
        shift: best.0,
        distance: best.1.sqrt(),
        aligned: sample.shifted(best.0),
    })
}

/// Unshifted ℓ² distance.
pub fn l2_distance(sample: &NumberState, reference: &[f64]) -> Result<f64> {
    if sample.sites() != reference.len() {
        return Err(ConfigError::LengthMismatch {
            expected: reference.len(),
            found: sample.sites(),
        }
        .into());
    }
    Ok(shifted_distance_sqr(sample.occupations(), reference, 0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Mean of n/N within the peak.
    pub position: f64,
    /// Standard deviation of n/N within the peak.
    pub width: f64,
    /// Probability carried by the peak.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakStatistics {
    pub peaks: Vec<Peak>,
    /// Set when the distribution has a single central maximum and was not
    /// split.
    pub single_peak: bool,
}

fn moments(items: impl Iterator<Item = (f64, f64)> + Clone) -> Peak {
    let weight: f64 = items.clone().map(|(_, w)| w).sum();
    let position = items.clone().map(|(x, w)| x * w).sum::<f64>() / weight;
    let var = items.map(|(x, w)| w * (x - position).powi(2)).sum::<f64>() / weight;
    Peak {
        position,
        width: var.max(0.0).sqrt(),
        weight,
    }
}

/// Peak positions and widths (in units of n/N) of a two-site distribution
/// `probabilities[n]`, split at n = N/2. An even-N central bin is shared
/// equally between the halves.
pub fn peak_statistics(probabilities: &[f64], atoms: usize) -> Result<PeakStatistics> {
    if probabilities.len() != atoms + 1 {
        return Err(ConfigError::LengthMismatch {
            expected: atoms + 1,
            found: probabilities.len(),
        }
        .into());
    }
    let n = atoms as f64;
    let x = |k: usize| k as f64 / n;

    let mode = (0..=atoms)
        .max_by(|&a, &b| probabilities[a].total_cmp(&probabilities[b]))
        .unwrap_or(0);
    if (2 * mode).abs_diff(atoms) <= 2 {
        let all = (0..=atoms).map(|k| (x(k), probabilities[k]));
        return Ok(PeakStatistics {
            peaks: vec![moments(all)],
            single_peak: true,
        });
    }

    let share = |k: usize| {
        if 2 * k == atoms {
            0.5
        } else {
            1.0
        }
    };
    let left = (0..=atoms)
        .filter(|&k| 2 * k <= atoms)
        .map(|k| (x(k), share(k) * probabilities[k]));
    let right = (0..=atoms)
        .filter(|&k| 2 * k >= atoms)
        .map(|k| (x(k), share(k) * probabilities[k]));
    Ok(PeakStatistics {
        peaks: vec![moments(left), moments(right)],
        single_peak: false,
    })
}

/// Window used by [`soliton_score`]: three sites, or one on rings too small
/// for a three-site window to discriminate.
fn score_window(sites: usize) -> usize {
    if sites >= 4 {
        3
    } else {
        1
    }
}

/// Localization contrast in [0, 1]: (max_k w_k − w̄)/(N − w̄), where w_k is
/// the windowed atom count centred at k and w̄ = window·N/L its value for a
/// uniform state. 0 for uniform, 1 for all atoms within one window.
pub fn soliton_score(sample: &NumberState) -> f64 {
    let occ = sample.occupations();
    let l = occ.len();
    let total = sample.total() as f64;
    if l == 0 || total == 0.0 {
        return 0.0;
    }
    let window = score_window(l);
    let half = (window / 2) as isize;
    let max_w = (0..l)
        .map(|k| {
            (-half..=half)
                .map(|j| occ[(k as isize + j).rem_euclid(l as isize) as usize])
                .sum::<usize>()
        })
        .max()
        .unwrap_or(0) as f64;
    let baseline = window as f64 * total / l as f64;
    ((max_w - baseline) / (total - baseline)).clamp(0.0, 1.0)
}
