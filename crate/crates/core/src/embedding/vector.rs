use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{clamp, Scalar};

/// Norms below this are treated as zero and produce a degenerate embedding.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("embedding needs at least 2 components, got {0}")]
    TooShort(usize),
    #[error("non-finite component at index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Unit-norm vector in the shared embedding space.
///
/// The only non-unit value is the zero vector, which carries `degenerate = true`
/// (empty or rejected texts). Construct through [`normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector<T> {
    components: Vec<T>,
    degenerate: bool,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn zero(dim: usize) -> Self {
        Self { components: vec![T::zero(); dim], degenerate: true }
    }

    /// Wrap components that are already unit-norm (e.g. read back from the
    /// cache) without renormalizing, so stored bits are preserved.
    pub(crate) fn from_stored(components: Vec<T>) -> Self {
        let degenerate = components.iter().all(|c| c.is_zero());
        Self { components, degenerate }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn norm(&self) -> T {
        l2_norm(&self.components)
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingVector<U> {
        EmbeddingVector {
            components: self.components.iter().map(|c| U::lit(c.as_f64())).collect(),
            degenerate: self.degenerate,
        }
    }
}

pub(crate) fn l2_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub(crate) fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&a, &b)| a * b).sum()
}

/// Scale a raw vector to unit ℓ2 norm.
///
/// A vector whose norm is below [`DEGENERATE_NORM`] maps to the zero vector
/// with the degenerate flag set.
pub fn normalize<T: Scalar>(raw: &[T]) -> Result<EmbeddingVector<T>, VectorError> {
    if raw.len() < 2 {
        return Err(VectorError::TooShort(raw.len()));
    }
    if let Some(index) = raw.iter().position(|c| !c.is_finite()) {
        return Err(VectorError::NonFinite { index });
    }
    // Rescale by the max magnitude first so the squared sum cannot overflow
    // or underflow for extreme but finite inputs.
    let scale = raw.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    if scale.is_zero() {
        return Ok(EmbeddingVector::zero(raw.len()));
    }
    let scaled: Vec<T> = raw.iter().map(|&c| c / scale).collect();
    let norm = l2_norm(&scaled);
    if (norm * scale).as_f64() < DEGENERATE_NORM {
        return Ok(EmbeddingVector::zero(raw.len()));
    }
    Ok(EmbeddingVector { components: scaled.into_iter().map(|c| c / norm).collect(), degenerate: false })
}

/// Cosine similarity of two unit vectors: their dot product clamped to [-1, 1].
/// Anything compared against a degenerate vector scores 0.
pub fn cosine<T: Scalar>(u: &EmbeddingVector<T>, v: &EmbeddingVector<T>) -> Result<T, VectorError> {
    if u.dim() != v.dim() {
        return Err(VectorError::DimensionMismatch { left: u.dim(), right: v.dim() });
    }
    if u.degenerate || v.degenerate {
        return Ok(T::zero());
    }
    Ok(clamp(dot(&u.components, &v.components), -T::one(), T::one()))
}

/// Cosine between an embedding and an arbitrary (not necessarily unit) vector,
/// such as a cultural centroid. Zero-norm targets score 0.
pub fn cosine_raw<T: Scalar>(u: &EmbeddingVector<T>, target: &[T]) -> Result<T, VectorError> {
    if u.dim() != target.len() {
        return Err(VectorError::DimensionMismatch { left: u.dim(), right: target.len() });
    }
    let norm = l2_norm(target);
    if u.degenerate || norm.as_f64() < DEGENERATE_NORM {
        return Ok(T::zero());
    }
    Ok(clamp(dot(&u.components, target) / norm, -T::one(), T::one()))
}
