use serde::{Deserialize, Serialize};

use crate::registry::{AtomicTool, ToolLibrary};
use crate::retrieval::{cosine_similarity, EmbeddingVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DedupDecision {
    Accept,
    /// The nearest existing tool and its code similarity. Per the evolution
    /// loop, the nearest tool receives the duplicate's hit credit.
    Reject {
        nearest_id: String,
        score: f64,
    },
}

impl DedupDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, DedupDecision::Accept)
    }
}

/// Accepts iff the maximum code similarity over the library is strictly
/// below `tau_dup`. Ties on the maximum go to the oldest tool.
pub fn dedup_check_embedding(
    code_embedding: &EmbeddingVector,
    library: &ToolLibrary,
    tau_dup: f64,
) -> DedupDecision {
    assert!((0.0..=1.0).contains(&tau_dup), "tau_dup must lie in [0, 1]");
    let mut best: Option<(&AtomicTool, f64)> = None;
    for tool in library.tools() {
        let Ok(score) =
            cosine_similarity(code_embedding.as_slice(), tool.code_embedding.as_slice())
        else {
            continue;
        };
        match best {
            Some((b, s)) if score < s || (score == s && b.created_seq <= tool.created_seq) => {}
            _ => best = Some((tool, score)),
        }
    }
    match best {
        Some((tool, score)) if score >= tau_dup => DedupDecision::Reject {
            nearest_id: tool.id.clone(),
            score,
        },
        _ => DedupDecision::Accept,
    }
}

pub fn dedup_check(candidate: &AtomicTool, library: &ToolLibrary, tau_dup: f64) -> DedupDecision {
    dedup_check_embedding(&candidate.code_embedding, library, tau_dup)
}
