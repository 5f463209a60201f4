use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use super::store::{content_digest, read_vector_file, VectorFileError};

/// What a provider hands back for one text, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum RawEmbedding {
    Vector(Vec<f64>),
    /// The provider refused the input (typically the empty string).
    Rejected,
}

#[derive(Debug, Clone, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("provider rejected input: {0}")]
    Rejected(String),
    #[error("no stored vector for digest {digest} (text {preview:?})")]
    MissingVector { digest: String, preview: String },
}

/// Source of raw sentence embeddings. Must be deterministic per `(model_id, text)`.
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// One result per input text, in input order.
    fn embed(&self, texts: &[&str]) -> Result<Vec<RawEmbedding>, ProviderError>;
}

fn preview(text: &str) -> String {
    text.chars().take(40).collect()
}

/// Serves vectors from a vector file keyed by content digest. Empty texts
/// absent from the file are rejected rather than reported missing.
#[derive(Debug, Clone)]
pub struct FileProvider {
    model_id: String,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl FileProvider {
    pub fn open(model_id: impl Into<String>, path: &Path) -> Result<Self, VectorFileError> {
        Ok(Self { model_id: model_id.into(), vectors: read_vector_file(path)? })
    }

    pub fn from_map(model_id: impl Into<String>, vectors: BTreeMap<String, Vec<f64>>) -> Self {
        Self { model_id: model_id.into(), vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for FileProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<RawEmbedding>, ProviderError> {
        texts
            .iter()
            .map(|text| {
                let digest = content_digest(&self.model_id, text);
                match self.vectors.get(&digest) {
                    Some(v) => Ok(RawEmbedding::Vector(v.clone())),
                    None if text.trim().is_empty() => Ok(RawEmbedding::Rejected),
                    None => Err(ProviderError::MissingVector { digest, preview: preview(text) }),
                }
            })
            .collect()
    }
}

/// Deterministic bag-of-words hashing encoder.
///
/// Each lowercased, punctuation-trimmed token maps to a pseudo-random vector
/// seeded by its SHA-256; a text embeds as the sum over its tokens. Texts that
/// share words get positive cosine, unrelated texts land near zero. Used for
/// synthetic fixtures and tests; it is not a semantic model.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    model_id: String,
    dim: usize,
}

impl HashingProvider {
    pub fn new(dim: usize) -> Self {
        Self { model_id: format!("hashing-bow-{dim}"), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for token in text.split_whitespace() {
            let token: String = token.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
            if token.is_empty() {
                continue;
            }
            let seed: [u8; 32] = Sha256::digest(token.as_bytes()).into();
            let mut rng = ChaCha8Rng::from_seed(seed);
            for a in acc.iter_mut() {
                *a += rng.random_range(-1.0..1.0);
            }
        }
        acc
    }
}

impl EmbeddingProvider for HashingProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<RawEmbedding>, ProviderError> {
        Ok(texts.iter().map(|t| RawEmbedding::Vector(self.embed_text(t))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::vector::{cosine, normalize};

    #[test]
    fn file_provider_reports_missing_digest() {
        let p = FileProvider::from_map("m", BTreeMap::new());
        match p.embed(&["hello"]) {
            Err(ProviderError::MissingVector { digest, .. }) => {
                assert_eq!(digest, content_digest("m", "hello"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hashing_is_deterministic_and_lexical() {
        let p = HashingProvider::new(64);
        assert_eq!(p.embed_text("Family unity"), p.embed_text("family  UNITY!"));
        let a = normalize(&p.embed_text("family unity respect")).unwrap();
        let b = normalize(&p.embed_text("family unity honor")).unwrap();
        let c = normalize(&p.embed_text("spreadsheet kernel compiler")).unwrap();
        assert!(cosine(&a, &b).unwrap() > 0.4);
        assert!(cosine(&a, &c).unwrap().abs() < 0.4);
        assert!(p.embed_text("").iter().all(|&x| x == 0.0));
    }
}
