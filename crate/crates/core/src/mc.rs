//! Monte Carlo zero counts of truncated Gaussian Taylor series.
//!
//! A sample at `t = log r²` is the random polynomial `Σ ξₙ √pₙ wⁿ` over the
//! tilted window; dividing `f(rw)` by `√H(t)` leaves its zeros in `|w| < 1`
//! unchanged, so the count is the zero count of `f` in `|z| < r`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{CoefficientModel, TiltedWindow, WindowOptions};
use crate::error::{Error, Result};
use crate::rng::GaussianStream;
use crate::roots::{count_zeros_unit_disk, CountFailure, CountOptions};
use crate::variance::t_of_r;

/// One truncated random series; `coeffs[k]` multiplies `w^{start+k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GafSample {
    pub coeffs: Vec<Complex64>,
    pub start: u64,
    pub seed: u64,
    pub index: u64,
}

impl GafSample {
    pub fn degree(&self) -> u64 {
        self.start + self.coeffs.len() as u64 - 1
    }
}

/// `cₙ = ξₙ √pₙ` with `ξₙ` addressed by `(seed, index, n)`.
pub fn sample_coeffs(window: &TiltedWindow, seed: u64, index: u64) -> GafSample {
    let coeffs = GaussianStream::new(seed, index, window.start())
        .zip(window.p())
        .map(|(xi, &p)| if p > 0.0 { xi * p.sqrt() } else { Complex64::new(0.0, 0.0) })
        .collect();
    GafSample {
        coeffs,
        start: window.start(),
        seed,
        index,
    }
}

/// Zeros of the sample polynomial in the unit disk.
pub fn count_zeros(sample: &GafSample, opts: &CountOptions) -> std::result::Result<u64, CountFailure> {
    count_zeros_unit_disk(&sample.coeffs, opts).map(|n| n + sample.start)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McOptions {
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub threads: Option<usize>,
    pub count: CountOptions,
    /// Abort when more than this fraction of counts fail.
    pub max_failure_rate: f64,
    pub window: WindowOptions,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            threads: None,
            count: CountOptions::default(),
            max_failure_rate: 1e-3,
            window: WindowOptions::default(),
        }
    }
}

/// Empirical law of the zero count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MCStats {
    /// Successful counts entering the statistics.
    pub samples: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub mean_stderr: f64,
    /// Bootstrap standard error of `variance` (exact fourth-moment formula
    /// at the empirical law).
    pub var_stderr: f64,
    pub failed_counts: usize,
}

/// Mean, variance and their standard errors for integer observations.
///
/// Power sums are accumulated exactly, so the result does not depend on
/// the order of `counts`.
pub fn summarize(counts: &[u64]) -> MCStats {
    let n = counts.len();
    let s1: u128 = counts.iter().map(|&x| x as u128).sum();
    let s2: u128 = counts.iter().map(|&x| (x as u128) * (x as u128)).sum();
    let nf = n as f64;
    let mean = if n > 0 { s1 as f64 / nf } else { f64::NAN };
    if n < 3 {
        return MCStats {
            samples: n,
            mean,
            variance: f64::NAN,
            mean_stderr: f64::NAN,
            var_stderr: f64::NAN,
            failed_counts: 0,
        };
    }
    // n·S₂ − S₁² is an exact integer.
    let centered = (n as u128 * s2 - s1 * s1) as f64;
    let variance = centered / (nf * (nf - 1.0));

    // Var(s²) = (μ₄ − σ⁴)/n + 2σ⁴/(n(n−1)) evaluated at the empirical law
    // (the exact bootstrap variance). Unlike a first-order (delta or
    // jackknife) estimate it keeps the σ⁴/n² term, which dominates when
    // μ₄ ≈ σ⁴, as for a fair coin.
    let mut values: Vec<u64> = counts.to_vec();
    values.sort_unstable();
    let mut m4 = 0.0;
    let mut k = 0;
    while k < values.len() {
        let x = values[k];
        let run = values[k..].iter().take_while(|&&v| v == x).count();
        m4 += run as f64 * (x as f64 - mean).powi(4);
        k += run;
    }
    m4 /= nf;
    let m2 = centered / (nf * nf);
    let var_of_var = (m4 - m2 * m2) / nf + 2.0 * m2 * m2 / (nf * (nf - 1.0));
    MCStats {
        samples: n,
        mean,
        variance,
        mean_stderr: (variance / nf).sqrt(),
        var_stderr: var_of_var.max(0.0).sqrt(),
        failed_counts: 0,
    }
}

/// Zero counts for sample indices `0..n_samples`, in index order.
pub fn sample_counts(
    window: &TiltedWindow,
    n_samples: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<std::result::Result<u64, CountFailure>>> {
    let run = || -> Vec<_> {
        (0..n_samples as u64)
            .into_par_iter()
            .map(|i| count_zeros(&sample_coeffs(window, seed, i), &opts.count))
            .collect()
    };
    match opts.threads {
        None => Ok(run()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

/// Monte Carlo mean and variance of the zero count over the window.
pub fn mc_stats_window(
    window: &TiltedWindow,
    n_samples: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<MCStats> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let results = sample_counts(window, n_samples, seed, opts)?;
    let counts: Vec<u64> = results.iter().filter_map(|r| r.ok()).collect();
    let failed = n_samples - counts.len();
    if failed as f64 > opts.max_failure_rate * n_samples as f64 {
        return Err(Error::TooManyFailures {
            failed,
            samples: n_samples,
            limit: opts.max_failure_rate,
        });
    }
    let mut stats = summarize(&counts);
    stats.failed_counts = failed;
    Ok(stats)
}

/// Monte Carlo statistics of `n_f(r)`.
pub fn mc_stats(
    model: &CoefficientModel,
    r: f64,
    n_samples: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<MCStats> {
    let t = t_of_r(model, r)?;
    mc_stats_at(model, t, n_samples, seed, opts)
}

/// [`mc_stats`] parameterized by `t = log r²`.
pub fn mc_stats_at(
    model: &CoefficientModel,
    t: f64,
    n_samples: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<MCStats> {
    let window = crate::covariance::tilted_window(model, t, &opts.window)?;
    mc_stats_window(&window, n_samples, seed, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarize_small_sample() {
        let s = summarize(&[0, 1, 1, 2]);
        assert_eq!(s.mean, 1.0);
        assert!((s.variance - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.mean_stderr - (2.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        // m₂ = 1/2, m₄ = 1/2: (m₄ − m₂²)/4 + 2m₂²/12.
        let se = (0.0625f64 + 1.0 / 24.0).sqrt();
        assert!((s.var_stderr - se).abs() < 1e-15);
    }

    #[test]
    fn samples_are_reproducible() {
        let w = CoefficientModel::exp().window(1.0).unwrap();
        assert_eq!(sample_coeffs(&w, 9, 4), sample_coeffs(&w, 9, 4));
        assert_ne!(sample_coeffs(&w, 9, 4), sample_coeffs(&w, 9, 5));
    }

    #[test]
    fn monomial_counts_are_deterministic() {
        let s = mc_stats(&CoefficientModel::monomial(3), 1.0, 200, 1, &McOptions::default()).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.failed_counts, 0);
    }

    #[test]
    fn too_few_samples() {
        assert!(mc_stats(&CoefficientModel::exp(), 1.0, 99, 1, &McOptions::default()).is_err());
    }
}
