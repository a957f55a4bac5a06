//! Description-embedding retrieval over the tool library: cosine
//! similarity, top-k ranking with a rerank hook, and the matched/missed
//! decision.

mod embed;

pub use embed::{
    EmbedError, Embedder, EmbeddingVector, HashEmbedder, HttpEmbedder, NORM_TOLERANCE,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{AtomicTool, ToolLibrary};

/// Default retrieval acceptance threshold.
pub const DEFAULT_TAU_RET: f64 = 0.55;
/// Default number of candidates retrieved per sub-goal.
pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTool {
    pub tool_id: String,
    pub score: f64,
    pub created_seq: u64,
}

/// Reorders retrieved candidates. Scores are left untouched.
pub trait Reranker: Send + Sync {
    fn rerank(
        &self,
        query: &str,
        candidates: Vec<ScoredTool>,
        library: &ToolLibrary,
    ) -> Vec<ScoredTool>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityReranker;

impl Reranker for IdentityReranker {
    fn rerank(
        &self,
        _query: &str,
        candidates: Vec<ScoredTool>,
        _library: &ToolLibrary,
    ) -> Vec<ScoredTool> {
        candidates
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RetrievalDecision {
    Matched { tool_id: String, score: f64 },
    Missed { best_score: Option<f64> },
}

impl RetrievalDecision {
    pub fn is_matched(&self) -> bool {
        matches!(self, Self::Matched { .. })
    }
}

fn score_tool(query: &EmbeddingVector, tool: &AtomicTool) -> f64 {
    // Library embeddings are validated to share the provider dimension and be
    // non-zero, so a failure here means the query came from another provider.
    cosine_similarity(query.as_slice(), tool.desc_embedding.as_slice()).unwrap_or(f64::NEG_INFINITY)
}

/// Scores every tool against `query` and keeps the best `k`, ordered by
/// descending score then ascending `created_seq`.
pub fn rank_by_embedding(
    library: &ToolLibrary,
    query: &EmbeddingVector,
    k: usize,
) -> Vec<ScoredTool> {
    assert!(k >= 1, "top-k retrieval needs k >= 1");
    let mut scored: Vec<ScoredTool> = library
        .tools()
        .map(|t| ScoredTool {
            tool_id: t.id.clone(),
            score: score_tool(query, t),
            created_seq: t.created_seq,
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.created_seq.cmp(&b.created_seq))
    });
    scored.truncate(k);
    scored
}

/// Applies the threshold rule to ranked candidates: the highest-scoring
/// candidate is reused when its score reaches `tau_ret` (inclusive).
pub fn decide_from_candidates(candidates: &[ScoredTool], tau_ret: f64) -> RetrievalDecision {
    let best = candidates.iter().reduce(|best, c| {
        if c.score > best.score || (c.score == best.score && c.created_seq < best.created_seq) {
            c
        } else {
            best
        }
    });
    match best {
        Some(b) if b.score >= tau_ret => RetrievalDecision::Matched {
            tool_id: b.tool_id.clone(),
            score: b.score,
        },
        Some(b) => RetrievalDecision::Missed {
            best_score: Some(b.score),
        },
        None => RetrievalDecision::Missed { best_score: None },
    }
}

/// Retrieval front-end binding an embedder and a reranker.
pub struct Retriever<'a> {
    embedder: &'a dyn Embedder,
    reranker: &'a dyn Reranker,
}

impl<'a> Retriever<'a> {
    pub fn new(embedder: &'a dyn Embedder, reranker: &'a dyn Reranker) -> Self {
        Self { embedder, reranker }
    }

    pub fn top_k(
        &self,
        library: &ToolLibrary,
        description: &str,
        k: usize,
    ) -> Result<Vec<ScoredTool>, EmbedError> {
        if library.is_empty() {
            return Ok(Vec::new());
        }
        let query = self.embedder.embed(description)?;
        let ranked = rank_by_embedding(library, &query, k);
        Ok(self.reranker.rerank(description, ranked, library))
    }

    pub fn decide(
        &self,
        library: &ToolLibrary,
        description: &str,
        k: usize,
        tau_ret: f64,
    ) -> Result<(RetrievalDecision, Vec<ScoredTool>), EmbedError> {
        let candidates = self.top_k(library, description, k)?;
        Ok((decide_from_candidates(&candidates, tau_ret), candidates))
    }
}

/// Result of sweeping the retrieval threshold over labeled scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub tau: f64,
    pub f1: f64,
}

/// Picks the threshold maximizing F1 over `(score, is_true_match)` pairs,
/// predicting a match whenever `score >= tau`. Candidate thresholds are the
/// distinct observed scores; ties in F1 go to the higher threshold.
/// Returns `None` when there are no positive labels.
pub fn calibrate_threshold(labeled: &[(f64, bool)]) -> Option<Calibration> {
    let positives = labeled.iter().filter(|(_, m)| *m).count();
    if positives == 0 {
        return None;
    }
    let mut candidates: Vec<f64> = labeled.iter().map(|(s, _)| *s).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best: Option<Calibration> = None;
    for &tau in &candidates {
        let tp = labeled.iter().filter(|(s, m)| *m && *s >= tau).count() as f64;
        let fp = labeled.iter().filter(|(s, m)| !*m && *s >= tau).count() as f64;
        let fneg = positives as f64 - tp;
        let f1 = if tp == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fneg)
        };
        if best.is_none_or(|b| f1 >= b.f1) {
            best = Some(Calibration {
                tau: tau.clamp(0.0, 1.0),
                f1,
            });
        }
    }
    best
}
