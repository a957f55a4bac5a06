//! Tool reuse rates, hit histograms and the cumulative utility objective.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalRecord, MetricsError};
use crate::registry::{Origin, ToolLibrary};

/// Fraction of `hits` that are at least `k`.
pub fn trr_from_hits(hits: &[u64], k: u64) -> Result<f64, MetricsError> {
    if hits.is_empty() {
        return Err(MetricsError::EmptyLibrary);
    }
    let reused = hits.iter().filter(|&&h| h >= k).count();
    Ok(reused as f64 / hits.len() as f64)
}

/// TRR@k over the whole library, with usage counts as hit-counts.
pub fn trr_at_k(library: &ToolLibrary, k: u64) -> Result<f64, MetricsError> {
    assert!(k >= 1, "TRR@k needs k >= 1");
    let hits: Vec<u64> = library.tools().map(|t| t.usage_count).collect();
    trr_from_hits(&hits, k)
}

/// Reuse rates split by origin. `None` marks an empty stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratifiedTrr {
    pub trr_evol: Option<f64>,
    pub trr_trans: Option<f64>,
}

pub fn trr_stratified(library: &ToolLibrary, k: u64) -> StratifiedTrr {
    let by_origin = |origin: Origin| -> Option<f64> {
        let hits: Vec<u64> = library
            .tools()
            .filter(|t| t.origin == origin)
            .map(|t| t.usage_count)
            .collect();
        trr_from_hits(&hits, k).ok()
    };
    StratifiedTrr {
        trr_evol: by_origin(Origin::Evolved),
        trr_trans: by_origin(Origin::Predefined),
    }
}

/// `sum_t (1{correct_t} - lambda * |L_t|)`.
pub fn cumulative_utility(
    records: &[EvalRecord],
    library_sizes: &[usize],
    lambda: f64,
) -> Result<f64, MetricsError> {
    let flags: Vec<bool> = records.iter().map(|r| r.correct).collect();
    utility_from_flags(&flags, library_sizes, lambda)
}

pub fn utility_from_flags(
    correct: &[bool],
    library_sizes: &[usize],
    lambda: f64,
) -> Result<f64, MetricsError> {
    if correct.len() != library_sizes.len() {
        return Err(MetricsError::LengthMismatch {
            records: correct.len(),
            sizes: library_sizes.len(),
        });
    }
    Ok(correct
        .iter()
        .zip(library_sizes)
        .map(|(&c, &size)| f64::from(u8::from(c)) - lambda * size as f64)
        .sum())
}

/// Reporting bins: label and inclusive hit range (`None` = unbounded).
pub const HISTOGRAM_BINS: [(&str, u64, Option<u64>); 6] = [
    ("0", 0, Some(0)),
    ("1-2", 1, Some(2)),
    ("3-4", 3, Some(4)),
    ("5-9", 5, Some(9)),
    ("10-49", 10, Some(49)),
    ("50+", 50, None),
];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HitHistogram {
    /// hit-count value -> number of tools with that count
    pub counts: BTreeMap<u64, usize>,
    pub total_tools: usize,
}

impl HitHistogram {
    pub fn from_hits(hits: impl IntoIterator<Item = u64>) -> Self {
        let mut h = Self::default();
        for hit in hits {
            *h.counts.entry(hit).or_default() += 1;
            h.total_tools += 1;
        }
        h
    }

    pub fn binned(&self) -> Vec<(&'static str, usize)> {
        HISTOGRAM_BINS
            .iter()
            .map(|&(label, lo, hi)| {
                let n = self
                    .counts
                    .range(lo..=hi.unwrap_or(u64::MAX))
                    .map(|(_, c)| c)
                    .sum();
                (label, n)
            })
            .collect()
    }
}

pub fn hit_histogram(library: &ToolLibrary) -> HitHistogram {
    HitHistogram::from_hits(library.tools().map(|t| t.usage_count))
}
