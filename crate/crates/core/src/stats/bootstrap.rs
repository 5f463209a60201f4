//! Percentile bootstrap confidence intervals for the mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::mean;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Coverage, e.g. 0.95.
    pub level: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { level: 0.95, resamples: 1000, seed: 42 }
    }
}

impl BootstrapConfig {
    /// Same settings with the seed mixed with a stream label, giving each
    /// aggregate cell its own reproducible random stream.
    pub fn for_stream(&self, label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(label.as_bytes());
        let digest = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        Self { seed: u64::from_le_bytes(bytes), ..*self }
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> T {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = T::lit(h - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Resampled means, in draw order. Each resample draws `n` indices with
/// `random_range(0..n)` from a ChaCha8 stream seeded with `seed`.
pub fn resample_means<T: Scalar>(values: &[T], resamples: usize, seed: u64) -> Vec<T> {
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = Vec::with_capacity(n);
    (0..resamples)
        .map(|_| {
            buf.clear();
            buf.extend((0..n).map(|_| values[rng.random_range(0..n)]));
            mean(&buf).expect("non-empty resample")
        })
        .collect()
}

/// Percentile interval `[q((1−level)/2), q((1+level)/2)]` of the resampled
/// means. `None` for an empty sample.
pub fn bootstrap_ci<T: Scalar>(values: &[T], config: &BootstrapConfig) -> Option<(T, T)> {
    if values.is_empty() || config.resamples == 0 {
        return None;
    }
    let mut means = resample_means(values, config.resamples, config.seed);
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite means"));
    let tail = (1.0 - config.level) / 2.0;
    Some((quantile_sorted(&means, tail), quantile_sorted(&means, 1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_has_degenerate_interval() {
        let xs = vec![0.37_f64; 50];
        assert_eq!(bootstrap_ci(&xs, &BootstrapConfig::default()), Some((0.37, 0.37)));
    }

    #[test]
    fn empty_sample_has_no_interval() {
        assert_eq!(bootstrap_ci::<f64>(&[], &BootstrapConfig::default()), None);
    }

    #[test]
    fn deterministic_per_seed() {
        let xs: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let c = BootstrapConfig::default();
        assert_eq!(bootstrap_ci(&xs, &c), bootstrap_ci(&xs, &c));
        assert_ne!(bootstrap_ci(&xs, &c), bootstrap_ci(&xs, &c.for_stream("other")));
    }

    #[test]
    fn interval_brackets_mean() {
        let xs: Vec<f64> = (0..40).map(|i| (i * 7 % 11) as f64 / 10.0).collect();
        let (lo, hi) = bootstrap_ci(&xs, &BootstrapConfig::default()).unwrap();
        let m = mean(&xs).unwrap();
        assert!(lo < m && m < hi);
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0_f64, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&s, 0.5), 1.5);
        assert_eq!(quantile_sorted(&s, 0.0), 0.0);
        assert_eq!(quantile_sorted(&s, 1.0), 3.0);
    }
}
