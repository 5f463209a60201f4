use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::rank::midranks;
use super::StatsError;
use crate::scalar::Scalar;

/// Largest effective sample size that gets an exact p-value.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
    None,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Increase => "increase",
            Direction::Decrease => "decrease",
            Direction::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Full enumeration of sign assignments.
    Exact,
    /// Normal approximation, tie-corrected variance, continuity correction.
    Normal,
    /// No nonzero differences.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRank {
    /// Sum of ranks of positive differences (after − before > 0).
    pub w: f64,
    /// Sum of ranks of negative differences.
    pub w_negative: f64,
    /// Pairs with nonzero difference.
    pub n_effective: usize,
    /// Two-sided.
    pub p_value: f64,
    pub direction: Direction,
    pub method: PValueMethod,
}

/// Wilcoxon signed-rank test on `after − before`. Zero differences are
/// dropped, |d| gets midranks; two-sided p is exact up to
/// [`EXACT_MAX_N`] nonzero pairs and normal-approximated above.
pub fn wilcoxon_signed_rank<T: Scalar>(pairs: &[(T, T)]) -> Result<SignedRank, StatsError> {
    let mut diffs = Vec::with_capacity(pairs.len());
    for &(before, after) in pairs {
        if !before.is_finite() || !after.is_finite() {
            return Err(StatsError::NonFinite);
        }
        let d = after - before;
        if !d.is_zero() {
            diffs.push(d);
        }
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(SignedRank {
            w: 0.0,
            w_negative: 0.0,
            n_effective: 0,
            p_value: 1.0,
            direction: Direction::None,
            method: PValueMethod::Degenerate,
        });
    }
    let abs: Vec<T> = diffs.iter().map(|d| d.abs()).collect();
    let ranking = midranks(&abs);
    let (mut w, mut w_negative) = (0.0, 0.0);
    for (d, r) in diffs.iter().zip(&ranking.ranks) {
        if *d > T::zero() {
            w += r;
        } else {
            w_negative += r;
        }
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let direction = if w > mean {
        Direction::Increase
    } else if w < mean {
        Direction::Decrease
    } else {
        Direction::None
    };

    let (p_value, method) = if n <= EXACT_MAX_N {
        // midranks are multiples of 1/2, so doubled ranks are integers
        let doubled: Vec<i64> = ranking.ranks.iter().map(|r| (r * 2.0).round() as i64).collect();
        let total: i64 = doubled.iter().sum();
        let observed = ((w * 2.0).round() as i64 * 2 - total).abs();
        let mut extreme = 0u64;
        for mask in 0u32..(1 << n) {
            let s: i64 = doubled.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, r)| r).sum();
            if (2 * s - total).abs() >= observed {
                extreme += 1;
            }
        }
        (extreme as f64 / f64::from(1u32 << n), PValueMethod::Exact)
    } else {
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ranking.tie_sum() / 48.0;
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        ((2.0 * normal.sf(z)).min(1.0), PValueMethod::Normal)
    };

    Ok(SignedRank { w, w_negative, n_effective: n, p_value, direction, method })
}
