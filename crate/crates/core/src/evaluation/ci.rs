//! 95% confidence intervals for the three sweep metrics.
//!
//! * Success rate: Wilson score interval for a binomial proportion.
//! * Convergence iteration: Gamma distribution fitted by moments.
//! * Sparsity error: Beta distribution fitted by moments.
//!
//! For the fitted families the interval is taken from the 2.5% and 97.5%
//! percentiles of the mean of `n` draws, estimated with a seeded parametric
//! bootstrap. When the moment fit is impossible (e.g. values outside the
//! Beta support), a plain percentile bootstrap over the samples is used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
const BOOTSTRAP_SEED: u64 = 0x005e_edc1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    SuccessRate,
    Convergence,
    Sparsity,
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::Config(format!("invalid binomial counts {successes}/{trials}")));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    Ok((lo, hi))
}

/// Interval for `samples` of the given metric. Success-rate samples are
/// 0/1 outcomes.
pub fn confidence_interval(metric: MetricKind, samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Config("confidence interval of no samples".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("confidence interval sample".into()));
    }
    match metric {
        MetricKind::SuccessRate => {
            let successes = samples.iter().filter(|&&v| v > 0.5).count();
            wilson_interval(successes, samples.len())
        }
        MetricKind::Convergence | MetricKind::Sparsity => {
            if samples.len() < 2 {
                return Err(Error::Config(format!("{metric:?} interval needs at least 2 samples")));
            }
            let (mean, var) = moments(samples);
            if var == 0.0 {
                return Ok((mean, mean));
            }
            let n = samples.len();
            let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
            let means = match metric {
                MetricKind::Convergence if samples.iter().all(|&v| v >= 0.0) && mean > 0.0 => {
                    let shape = mean * mean / var;
                    let scale = var / mean;
                    let dist = Gamma::new(shape, scale).map_err(|e| Error::Config(e.to_string()))?;
                    parametric_means(&dist, n, &mut rng)
                }
                MetricKind::Sparsity if beta_fit(samples, mean, var).is_some() => {
                    let (a, b) = beta_fit(samples, mean, var).expect("checked");
                    let dist = Beta::new(a, b).map_err(|e| Error::Config(e.to_string()))?;
                    parametric_means(&dist, n, &mut rng)
                }
                _ => resample_means(samples, &mut rng),
            };
            Ok((quantile(&means, 0.025), quantile(&means, 0.975)))
        }
    }
}

/// Sample mean and unbiased variance.
fn moments(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

fn beta_fit(samples: &[f64], mean: f64, var: f64) -> Option<(f64, f64)> {
    if samples.iter().any(|&v| !(0.0..=1.0).contains(&v)) || mean <= 0.0 || mean >= 1.0 {
        return None;
    }
    let common = mean * (1.0 - mean) / var - 1.0;
    (common > 0.0).then_some((mean * common, (1.0 - mean) * common))
}

fn parametric_means<D: Distribution<f64>>(dist: &D, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| dist.sample(rng)).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    means
}

fn resample_means(samples: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = samples.len();
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    means
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Median of unsorted data.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Inverts the score test on a fine grid: the interval is every `p` whose
    /// standardised distance from the observed proportion is within `z`.
    fn wilson_by_scan(successes: usize, trials: usize) -> (f64, f64) {
        let n = trials as f64;
        let obs = successes as f64 / n;
        let steps = 2_000_000;
        let accepted: Vec<f64> = (0..=steps)
            .map(|i| i as f64 / steps as f64)
            .filter(|&p| (obs - p).abs() <= Z_95 * (p * (1.0 - p) / n).sqrt() || (p == obs))
            .collect();
        (accepted[0], *accepted.last().unwrap())
    }

    #[test]
    fn wilson_full_success_of_25() {
        let (lo, hi) = wilson_interval(25, 25).unwrap();
        assert_eq!(hi, 1.0);
        let (scan_lo, _) = wilson_by_scan(25, 25);
        assert!((lo - scan_lo).abs() < 1e-5, "{lo} vs {scan_lo}");
        assert!((lo - 0.8668).abs() < 1e-3);
    }

    #[test]
    fn wilson_matches_score_inversion() {
        for (s, n) in [(0, 25), (3, 25), (12, 25), (16, 25), (1, 3), (5, 5)] {
            let (lo, hi) = wilson_interval(s, n).unwrap();
            let (slo, shi) = wilson_by_scan(s, n);
            assert!(
                (lo - slo).abs() < 1e-5 && (hi - shi).abs() < 1e-5,
                "{s}/{n}: ({lo},{hi}) vs ({slo},{shi})"
            );
        }
        assert_eq!(wilson_interval(0, 25).unwrap().0, 0.0);
    }

    #[test]
    fn degenerate_samples_give_point_interval() {
        assert_eq!(
            confidence_interval(MetricKind::Sparsity, &[0.1; 5]).unwrap(),
            (0.1, 0.1)
        );
        assert_eq!(
            confidence_interval(MetricKind::Convergence, &[3000.0; 4]).unwrap(),
            (3000.0, 3000.0)
        );
    }

    #[test]
    fn fitted_intervals_bracket_the_mean() {
        let conv = [12_000.0, 15_000.0, 9_000.0, 20_000.0, 14_000.0, 11_000.0];
        let (lo, hi) = confidence_interval(MetricKind::Convergence, &conv).unwrap();
        let mean = conv.iter().sum::<f64>() / conv.len() as f64;
        assert!(lo < mean && mean < hi && lo > 0.0);
        let sp = [0.01, 0.02, 0.0, 0.05, 0.015];
        let (lo, hi) = confidence_interval(MetricKind::Sparsity, &sp).unwrap();
        assert!(lo >= 0.0 && hi <= 1.0 && lo < hi);
        // Deterministic.
        assert_eq!(confidence_interval(MetricKind::Sparsity, &sp).unwrap(), (lo, hi));
    }

    #[test]
    fn errors() {
        assert!(confidence_interval(MetricKind::Sparsity, &[]).is_err());
        assert!(confidence_interval(MetricKind::Sparsity, &[0.1]).is_err());
        assert!(wilson_interval(3, 2).is_err());
    }
}
