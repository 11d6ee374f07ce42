//! Binning analysis for correlated Monte Carlo time series.

/// Mean and error bar of a correlated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningEstimate {
    pub mean: f64,
    /// Sample variance of the raw series.
    pub variance: f64,
    /// Error bar assuming independent samples.
    pub naive_error: f64,
    /// Error bar from the binning plateau.
    pub error: f64,
    /// Integrated autocorrelation time, ½ (error / naive_error)².
    pub tau_int: f64,
    /// Bin size at which the plateau was detected.
    pub bin_size: usize,
    /// False if the error kept growing up to the coarsest usable level.
    pub plateau: bool,
}

/// Fewest bins a level may have and still be used.
const MIN_BINS: usize = 32;

fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Bins the series with sizes 1, 2, 4, … and returns the error at the first
/// level where it stops growing by more than 5%.
pub fn binning_analysis(series: &[f64]) -> BinningEstimate {
    let n = series.len();
    if n == 0 {
        return BinningEstimate {
            mean: f64::NAN,
            variance: f64::NAN,
            naive_error: f64::NAN,
            error: f64::NAN,
            tau_int: f64::NAN,
            bin_size: 1,
            plateau: false,
        };
    }
    let (mean, naive_error) = mean_and_error(series);
    let variance = naive_error * naive_error * n as f64;

    let mut levels: Vec<(usize, f64)> = vec![(1, naive_error)];
    let mut current = series.to_vec();
    let mut size = 1;
    while current.len() / 2 >= MIN_BINS {
        current = current.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        size *= 2;
        levels.push((size, mean_and_error(&current).1));
    }

    let found = levels
        .windows(2)
        .position(|w| w[1].1 <= 1.05 * w[0].1);
    let (bin_size, error, plateau) = match found {
        Some(i) => (levels[i].0, levels[i].1.max(levels[i + 1].1), true),
        None => {
            let &(s, e) = levels
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one level");
            (s, e, levels.len() == 1)
        }
    };
    let tau_int = if naive_error > 0.0 {
        0.5 * (error / naive_error).powi(2)
    } else {
        0.5
    };
    BinningEstimate {
        mean,
        variance,
        naive_error,
        error,
        tau_int,
        bin_size,
        plateau,
    }
}
