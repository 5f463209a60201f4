//! Sentence embeddings: unit-norm vectors, the cosine primitive, providers and
//! the content-addressed cache that sits in front of them.

mod cache;
mod provider;
pub mod remote;
mod store;
mod vector;

use std::collections::HashMap;
use std::ops::Range;

use rayon::prelude::*;
use thiserror::Error;

pub use cache::{CachedVector, DimensionDrift, EmbeddingCache};
pub use provider::{EmbeddingProvider, FileProvider, HashingProvider, ProviderError, RawEmbedding};
pub use remote::RemoteProvider;
pub use store::{
    content_digest, format_vector_file, parse_vector_file, read_vector_file, write_atomic, VectorFileError,
};
pub use vector::{cosine, cosine_raw, normalize, EmbeddingVector, VectorError, DEGENERATE_NORM};

use remote::MAX_TEXTS_PER_REQUEST;

#[derive(Debug, Error)]
pub enum EmbedError {
    /// `inputs` spans the positions (in the caller's text slice) of the
    /// failed provider request.
    #[error("provider failed for inputs {inputs:?}: {source}")]
    Provider { inputs: Range<usize>, source: ProviderError },
    #[error(transparent)]
    DimensionDrift(#[from] DimensionDrift),
    #[error("input {index}: {source}")]
    Vector { index: usize, source: VectorError },
    #[error("cannot size a degenerate embedding before any vector has been seen")]
    UnknownDimension,
}

/// Embed `texts` through `cache` and `provider`, in input order.
///
/// The cache is consulted first; only unseen texts reach the provider, each at
/// most once per call, in requests of at most 256 texts that may run in
/// parallel. Empty (or whitespace-only) texts are sent on their own; if the
/// provider rejects them they become the degenerate zero vector.
pub fn embed_batch(
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    texts: &[&str],
) -> Result<Vec<CachedVector>, EmbedError> {
    let model_id = provider.model_id();
    let digests: Vec<String> = texts.iter().map(|t| content_digest(model_id, t)).collect();

    // first input index per unseen digest, in input order
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut missing: Vec<usize> = Vec::new();
    for (i, d) in digests.iter().enumerate() {
        if !seen.contains_key(d.as_str()) {
            seen.insert(d, i);
            if !cache.contains(d) {
                missing.push(i);
            }
        }
    }

    let (blank, regular): (Vec<usize>, Vec<usize>) = missing.into_iter().partition(|&i| texts[i].trim().is_empty());

    let chunks: Vec<&[usize]> = regular.chunks(MAX_TEXTS_PER_REQUEST).collect();
    let fetched: Vec<Vec<(usize, RawEmbedding)>> = chunks
        .par_iter()
        .map(|chunk| {
            let batch: Vec<&str> = chunk.iter().map(|&i| texts[i]).collect();
            let inputs = chunk[0]..chunk[chunk.len() - 1] + 1;
            let raw =
                provider.embed(&batch).map_err(|source| EmbedError::Provider { inputs: inputs.clone(), source })?;
            if raw.len() != batch.len() {
                return Err(EmbedError::Provider {
                    inputs,
                    source: ProviderError::Malformed(format!("expected {} vectors, got {}", batch.len(), raw.len())),
                });
            }
            Ok(chunk.iter().copied().zip(raw).collect())
        })
        .collect::<Result<_, _>>()?;

    let mut results: Vec<(usize, RawEmbedding)> = fetched.into_iter().flatten().collect();
    for i in blank {
        match provider.embed(&[texts[i]]) {
            Ok(mut raw) if raw.len() == 1 => results.push((i, raw.remove(0))),
            Ok(raw) => {
                return Err(EmbedError::Provider {
                    inputs: i..i + 1,
                    source: ProviderError::Malformed(format!("expected 1 vector, got {}", raw.len())),
                })
            }
            Err(ProviderError::Rejected(_)) => results.push((i, RawEmbedding::Rejected)),
            Err(source) => return Err(EmbedError::Provider { inputs: i..i + 1, source }),
        }
    }

    // vectors first so a rejected input can borrow the batch dimension
    results.sort_by_key(|(i, raw)| (matches!(raw, RawEmbedding::Rejected), *i));
    for (i, raw) in results {
        let vector = match raw {
            RawEmbedding::Vector(v) => {
                if let Some(expected) = cache.dim() {
                    if expected != v.len() {
                        return Err(DimensionDrift { expected, got: v.len() }.into());
                    }
                }
                normalize(&v).map_err(|source| EmbedError::Vector { index: i, source })?
            }
            RawEmbedding::Rejected => EmbeddingVector::zero(cache.dim().ok_or(EmbedError::UnknownDimension)?),
        };
        cache.insert(digests[i].clone(), vector)?;
    }

    Ok(digests.iter().map(|d| cache.get(d).expect("every digest cached above")).collect())
}
