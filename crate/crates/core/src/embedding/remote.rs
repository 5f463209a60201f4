//! HTTP client for the embedding sidecar.
//!
//! `POST {endpoint}/v1/embed` with body `{"model": ..., "texts": [...]}`
//! (at most [`MAX_TEXTS_PER_REQUEST`] texts) answers
//! `{"model": ..., "dim": n, "vectors": [[...], ...], "degenerate": [i, ...]}`.
//! `degenerate` is optional and lists indices the service could not embed.
//! `GET {endpoint}/v1/health` answers `{"status": "ok", "model": ..., "dim": n}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::provider::{EmbeddingProvider, ProviderError, RawEmbedding};

pub const MAX_TEXTS_PER_REQUEST: usize = 256;

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub model: &'a str,
    pub texts: &'a [&'a str],
}

#[derive(Debug, Deserialize, Serialize)]
pub struct EmbedResponse {
    pub model: String,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default)]
    pub degenerate: Vec<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct Health {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

pub struct RemoteProvider {
    endpoint: String,
    model_id: String,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(endpoint: &str, model_id: impl Into<String>) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self { endpoint: endpoint.trim_end_matches('/').to_string(), model_id: model_id.into(), client })
    }

    pub fn health(&self) -> Result<Health, ProviderError> {
        let resp = self
            .client
            .get(format!("{}/v1/health", self.endpoint))
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ProviderError::Transport(format!("health returned {}", resp.status())));
        }
        resp.json().map_err(|e| ProviderError::Malformed(e.to_string()))
    }

    fn embed_chunk(&self, texts: &[&str]) -> Result<Vec<RawEmbedding>, ProviderError> {
        let resp = self
            .client
            .post(format!("{}/v1/embed", self.endpoint))
            .json(&EmbedRequest { model: &self.model_id, texts })
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 400 {
            let body = resp.text().unwrap_or_default();
            return Err(ProviderError::Rejected(body));
        }
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("embed returned {status}")));
        }
        let body: EmbedResponse = resp.json().map_err(|e| ProviderError::Malformed(e.to_string()))?;
        decode_response(&self.model_id, texts.len(), body)
    }
}

pub(crate) fn decode_response(
    model_id: &str,
    expected: usize,
    body: EmbedResponse,
) -> Result<Vec<RawEmbedding>, ProviderError> {
    if body.model != model_id {
        return Err(ProviderError::Malformed(format!(
            "response model {:?} differs from requested {model_id:?}",
            body.model
        )));
    }
    if body.vectors.len() != expected {
        return Err(ProviderError::Malformed(format!("expected {expected} vectors, got {}", body.vectors.len())));
    }
    let mut out = Vec::with_capacity(expected);
    for (i, v) in body.vectors.into_iter().enumerate() {
        if body.degenerate.contains(&i) {
            out.push(RawEmbedding::Rejected);
        } else if v.len() != body.dim {
            return Err(ProviderError::Malformed(format!(
                "vector {i} has {} components, declared dim {}",
                v.len(),
                body.dim
            )));
        } else {
            out.push(RawEmbedding::Vector(v));
        }
    }
    Ok(out)
}

impl EmbeddingProvider for RemoteProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<RawEmbedding>, ProviderError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(MAX_TEXTS_PER_REQUEST) {
            out.extend(self.embed_chunk(chunk)?);
        }
        Ok(out)
    }
}
