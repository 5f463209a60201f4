use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::rank::midranks;
use super::StatsError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    /// Tie-corrected H.
    pub h: f64,
    pub df: usize,
    pub p_value: f64,
    /// H / (n − 1).
    pub epsilon_squared: f64,
    /// (H − k + 1) / (n − k), floored at 0.
    pub epsilon_squared_adjusted: f64,
    pub group_sizes: Vec<usize>,
}

impl KruskalWallis {
    pub fn n(&self) -> usize {
        self.group_sizes.iter().sum()
    }
}

/// Effect size corrected for the k − 1 expected under the null:
/// max(0, (H − k + 1) / (n − k)).
pub fn adjusted_epsilon_squared(h: f64, k: usize, n: usize) -> f64 {
    if n <= k {
        return 0.0;
    }
    ((h - k as f64 + 1.0) / (n - k) as f64).max(0.0)
}

/// Kruskal–Wallis H with the standard tie correction; p from the chi-square
/// upper tail with k − 1 degrees of freedom. When every value is identical
/// H = 0 and p = 1.
pub fn kruskal_wallis<T: Scalar>(groups: &[&[T]]) -> Result<KruskalWallis, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: k });
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup(i));
    }
    let pooled: Vec<T> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    if pooled.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = pooled.len();
    if n < k + 1 {
        return Err(StatsError::TooFewObservations { groups: k, n });
    }
    let group_sizes: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let ranking = midranks(&pooled);
    let nf = n as f64;
    let correction = 1.0 - ranking.tie_sum() / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(KruskalWallis {
            h: 0.0,
            df: k - 1,
            p_value: 1.0,
            epsilon_squared: 0.0,
            epsilon_squared_adjusted: 0.0,
            group_sizes,
        });
    }
    let mut offset = 0;
    let mut sum_term = 0.0;
    for &size in &group_sizes {
        let rank_sum: f64 = ranking.ranks[offset..offset + size].iter().sum();
        sum_term += rank_sum * rank_sum / size as f64;
        offset += size;
    }
    let raw = 12.0 / (nf * (nf + 1.0)) * sum_term - 3.0 * (nf + 1.0);
    let h = (raw / correction).max(0.0);
    let chi = ChiSquared::new((k - 1) as f64).expect("df >= 1");
    Ok(KruskalWallis {
        h,
        df: k - 1,
        p_value: chi.sf(h).clamp(0.0, 1.0),
        epsilon_squared: h / (nf - 1.0),
        epsilon_squared_adjusted: adjusted_epsilon_squared(h, k, n),
        group_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjusted_effect_size_reference_cells() {
        // (H, groups, observations, reported effect size to 3 decimals)
        let cells = [
            (34.86, 3, 900, 0.037),
            (50.21, 3, 900, 0.054),
            (3.91, 3, 300, 0.006),
            (77.51, 3, 450, 0.169),
            (24.43, 2, 600, 0.039),
            (1.44, 2, 200, 0.002),
            (3.11, 2, 300, 0.007),
            (90.97, 2, 600, 0.150),
            (69.86, 2, 300, 0.231),
            (0.11, 2, 200, 0.0),
        ];
        for (h, k, n, reported) in cells {
            let e = adjusted_epsilon_squared(h, k, n);
            assert!((e - reported).abs() <= 0.0005 + 1e-12, "H={h}: {e} vs {reported}");
        }
    }

    #[test]
    fn identical_groups() {
        let a = [1.0_f64, 2.0, 3.0];
        let r = kruskal_wallis(&[&a, &a]).unwrap();
        assert!(r.h.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert!(r.epsilon_squared.abs() < 1e-12);
    }

    #[test]
    fn all_values_equal() {
        let a = [0.5_f64; 4];
        let r = kruskal_wallis(&[&a, &a[..2]]).unwrap();
        assert_eq!((r.h, r.p_value, r.epsilon_squared), (0.0, 1.0, 0.0));
    }

    #[test]
    fn separated_groups() {
        // 12/(6*7) * (6^2/3 + 15^2/3) - 3*7 = 27/7
        let r = kruskal_wallis(&[&[1.0_f64, 2.0, 3.0][..], &[4.0, 5.0, 6.0]]).unwrap();
        assert!((r.h - 27.0 / 7.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
        assert!((r.epsilon_squared - r.h / 5.0).abs() < 1e-15);
    }

    #[test]
    fn input_errors() {
        let a = [1.0_f64, 2.0];
        assert!(matches!(kruskal_wallis(&[&a[..]]), Err(StatsError::TooFewGroups { .. })));
        assert!(matches!(kruskal_wallis(&[&a[..], &[]]), Err(StatsError::EmptyGroup(1))));
        assert!(matches!(
            kruskal_wallis(&[&[1.0_f64][..], &[2.0]]),
            Err(StatsError::TooFewObservations { groups: 2, n: 2 })
        ));
        assert!(matches!(kruskal_wallis(&[&a[..], &[f64::NAN]]), Err(StatsError::NonFinite)));
    }
}
