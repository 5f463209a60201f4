//! Nonparametric tests over metric score sets.

pub mod bootstrap;
mod kruskal;
mod rank;
mod suite;
mod wilcoxon;

use thiserror::Error;

use crate::scalar::Scalar;

pub use bootstrap::{bootstrap_ci, BootstrapConfig};
pub use kruskal::{adjusted_epsilon_squared, kruskal_wallis, KruskalWallis};
pub use rank::{midranks, Ranking};
pub use suite::{run_stat_suite, write_stats_csv, KwGrouping, KwRow, StatPlan, StatReport, WilcoxonRow};
pub use wilcoxon::{wilcoxon_signed_rank, Direction, PValueMethod, SignedRank, EXACT_MAX_N};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("need more than {groups} observations in total, got {n}")]
    TooFewObservations { groups: usize, n: usize },
    #[error("non-finite value in input")]
    NonFinite,
}

/// Arithmetic mean with one refinement pass, so a constant sample returns
/// that constant exactly.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let n = T::from_count(values.len());
    let first = values.iter().copied().sum::<T>() / n;
    let correction = values.iter().map(|&x| x - first).sum::<T>() / n;
    Some(first + correction)
}

/// Population standard deviation (divisor n).
pub fn population_sd<T: Scalar>(values: &[T]) -> Option<T> {
    let m = mean(values)?;
    let n = T::from_count(values.len());
    Some((values.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_mean_is_exact() {
        for v in [0.1_f64, 0.37, 1.0 / 3.0, -0.7, 0.282] {
            for n in [1usize, 3, 50, 150, 1000] {
                let xs = vec![v; n];
                assert_eq!(mean(&xs), Some(v), "v={v} n={n}");
                assert_eq!(population_sd(&xs), Some(0.0));
            }
        }
    }

    #[test]
    fn simple_moments() {
        assert_eq!(mean(&[0.0_f64, 1.0]), Some(0.5));
        assert_eq!(population_sd(&[0.0_f64, 1.0]), Some(0.5));
        assert_eq!(mean::<f64>(&[]), None);
        assert_eq!(mean(&[1.0_f32, 2.0, 3.0]), Some(2.0));
    }
}
