//! Summary statistics for Monte Carlo rate samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator, 0 for a single sample).
    pub std: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n: usize,
}

/// Mean, sample standard deviation and normal-approximation 95% interval.
///
/// Sums are taken relative to the first sample, so identical samples give
/// exactly that value with zero spread.
pub fn summarize(samples: &[f64]) -> Option<Summary> {
    let (&first, _) = samples.split_first()?;
    let n = samples.len();
    let shift: f64 = samples.iter().map(|x| x - first).sum::<f64>() / n as f64;
    let mean = first + shift;
    let std = if n > 1 {
        let ss: f64 = samples.iter().map(|x| (x - first - shift).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = Z95 * std / (n as f64).sqrt();
    Some(Summary { mean, std, ci95_low: mean - half, ci95_high: mean + half, n })
}

/// Percentile bootstrap interval for the mean of paired differences `a − b`.
///
/// Trials missing from either side are dropped. Returns
/// `(mean_difference, low, high)` at the given two-sided level.
pub fn paired_bootstrap(
    a: &[Option<f64>],
    b: &[Option<f64>],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Option<(f64, f64, f64)> {
    let diffs: Vec<f64> = a.iter().zip(b).filter_map(|(x, y)| Some((*x)? - (*y)?)).collect();
    let n = diffs.len();
    if n == 0 || resamples == 0 {
        return None;
    }
    let observed = diffs.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Some((observed, pick(tail), pick(1.0 - tail)))
}
