//! Embedding providers.
//!
//! Two providers ship with the crate: [`HashEmbedder`], a deterministic
//! feature-hashing embedder used in tests and offline runs, and
//! [`HttpEmbedder`], a thin client for an external embedding service
//! speaking `{model, input: [string]} -> {vectors: [[real]]}`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Tolerance on the unit-norm invariant.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding has dimension {got}, provider declares {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding is the zero vector or not finite")]
    Degenerate,
}

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes `values` to unit L2 norm.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::Degenerate);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbedError::Degenerate);
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Self(values))
    }

    /// Wraps raw values without normalizing. Used for hand-built vectors in
    /// similarity computations; library code should prefer [`Self::normalized`].
    pub fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }
}

/// Text embedding provider contract.
pub trait Embedder: Send + Sync {
    /// Identity string recorded in library snapshots, e.g. `hash:64`.
    fn identity(&self) -> String;

    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Feature-hashing embedder: each whitespace-separated token (lowercased,
/// stripped of surrounding punctuation) increments one of `dim` buckets
/// chosen by SHA-256; the count vector is then normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "hash embedder needs at least one bucket");
        Self { dim }
    }

    fn bucket(&self, token: &str) -> usize {
        let digest = Sha256::digest(token.as_bytes());
        let mut prefix = [0u8; 8];
        prefix.copy_from_slice(&digest[..8]);
        (u64::from_le_bytes(prefix) % self.dim as u64) as usize
    }
}

fn normalize_token(raw: &str) -> String {
    raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '_')
        .to_lowercase()
}

impl Embedder for HashEmbedder {
    fn identity(&self) -> String {
        format!("hash:{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut counts = vec![0.0; self.dim];
        let mut seen = false;
        for raw in text.split_whitespace() {
            let token = normalize_token(raw);
            // Pure-punctuation tokens still carry signal (e.g. operators in code).
            let token = if token.is_empty() {
                raw.to_string()
            } else {
                token
            };
            counts[self.bucket(&token)] += 1.0;
            seen = true;
        }
        if !seen {
            return Err(EmbedError::EmptyText);
        }
        EmbeddingVector::normalized(counts)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an external embedding service.
pub struct HttpEmbedder {
    url: String,
    model: String,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, model: impl Into<String>, dim: usize) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            dim,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn identity(&self) -> String {
        format!("http:{}#{}", self.url, self.model)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text])?;
        out.pop()
            .ok_or_else(|| EmbedError::ProviderUnavailable("empty response".into()))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let request = EmbedRequest {
            model: &self.model,
            input: texts.to_vec(),
        };
        let response: EmbedResponse = self
            .client
            .post(&self.url)
            .json(&request)
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        if response.vectors.len() != texts.len() {
            return Err(EmbedError::ProviderUnavailable(format!(
                "requested {} vectors, received {}",
                texts.len(),
                response.vectors.len()
            )));
        }
        response
            .vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.dim,
                        got: v.len(),
                    });
                }
                EmbeddingVector::normalized(v)
            })
            .collect()
    }
}
