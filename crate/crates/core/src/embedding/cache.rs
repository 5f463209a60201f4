use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use super::store::{format_vector_file, parse_vector_file, write_atomic, VectorFileError};
use super::vector::EmbeddingVector;

pub type CachedVector = Arc<EmbeddingVector<f64>>;

#[derive(Debug, Error, PartialEq)]
#[error("dimension drift: cache holds dim {expected}, got {got}")]
pub struct DimensionDrift {
    pub expected: usize,
    pub got: usize,
}

#[derive(Debug, Default)]
struct Inner {
    entries: BTreeMap<String, CachedVector>,
    dim: Option<usize>,
}

/// Normalized embeddings keyed by [`content_digest`](super::content_digest).
///
/// Safe to share across threads. Writes are atomic per entry; since entries
/// are deterministic, concurrent writers of the same key are harmless.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    inner: RwLock<Inner>,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load a cache previously written by [`EmbeddingCache::save`]. A missing
    /// file yields an empty cache.
    pub fn load(path: &Path) -> Result<Self, VectorFileError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(source) => return Err(VectorFileError::Io { path: path.to_path_buf(), source }),
        };
        let cache = Self::new();
        for (digest, values) in parse_vector_file(&text, path)? {
            cache.insert(digest, EmbeddingVector::from_stored(values)).map_err(|e| VectorFileError::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: e.to_string(),
            })?;
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<(), VectorFileError> {
        write_atomic(path, self.to_vector_file().as_bytes())
            .map_err(|source| VectorFileError::Io { path: path.to_path_buf(), source })
    }

    pub fn to_vector_file(&self) -> String {
        let inner = self.inner.read().expect("cache lock poisoned");
        format_vector_file(inner.entries.iter().map(|(k, v)| (k.as_str(), v.components())))
    }

    pub fn get(&self, digest: &str) -> Option<CachedVector> {
        self.inner.read().expect("cache lock poisoned").entries.get(digest).cloned()
    }

    pub fn contains(&self, digest: &str) -> bool {
        self.inner.read().expect("cache lock poisoned").entries.contains_key(digest)
    }

    pub fn insert(&self, digest: String, vector: EmbeddingVector<f64>) -> Result<CachedVector, DimensionDrift> {
        let mut inner = self.inner.write().expect("cache lock poisoned");
        match inner.dim {
            Some(expected) if expected != vector.dim() => return Err(DimensionDrift { expected, got: vector.dim() }),
            _ => inner.dim = Some(vector.dim()),
        }
        let v = Arc::new(vector);
        inner.entries.insert(digest, Arc::clone(&v));
        Ok(v)
    }

    pub fn dim(&self) -> Option<usize> {
        self.inner.read().expect("cache lock poisoned").dim
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock poisoned").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
