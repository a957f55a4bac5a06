use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    cumulative_utility, hit_histogram, trr_at_k, trr_stratified, EvalRecord, HitHistogram,
    MetricsError,
};
use crate::registry::ToolLibrary;

/// Thresholds reported for TRR@k.
pub const REPORT_TRR_KS: [u64; 4] = [1, 2, 5, 10];

/// Run-level metrics document. `None` values serialize as `null` and mean
/// "undefined" (empty library or empty stratum, or no records).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub trr: BTreeMap<u64, Option<f64>>,
    pub trr_evol: BTreeMap<u64, Option<f64>>,
    pub trr_trans: BTreeMap<u64, Option<f64>>,
    pub utility: f64,
    pub histogram: HitHistogram,
}

impl MetricsReport {
    pub fn build(
        records: &[EvalRecord],
        library_sizes: &[usize],
        library: &ToolLibrary,
        lambda: f64,
    ) -> Result<Self, MetricsError> {
        let utility = cumulative_utility(records, library_sizes, lambda)?;
        let accuracy = (!records.is_empty())
            .then(|| records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64);
        let mut trr = BTreeMap::new();
        let mut trr_evol = BTreeMap::new();
        let mut trr_trans = BTreeMap::new();
        for k in REPORT_TRR_KS {
            trr.insert(k, trr_at_k(library, k).ok());
            let s = trr_stratified(library, k);
            trr_evol.insert(k, s.trr_evol);
            trr_trans.insert(k, s.trr_trans);
        }
        Ok(Self {
            accuracy,
            trr,
            trr_evol,
            trr_trans,
            utility,
            histogram: hit_histogram(library),
        })
    }

    /// Per-problem CSV: one row per record with the library size after it.
    pub fn records_csv(
        records: &[EvalRecord],
        library_sizes: &[usize],
    ) -> Result<String, MetricsError> {
        if records.len() != library_sizes.len() {
            return Err(MetricsError::LengthMismatch {
                records: records.len(),
                sizes: library_sizes.len(),
            });
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record([
            "problem_id",
            "predicted",
            "gold_kind",
            "gold_value",
            "correct",
            "judge_mode",
            "library_size",
        ])
        .expect("in-memory csv write");
        for (r, size) in records.iter().zip(library_sizes) {
            let gold_value = match &r.gold.value {
                serde_json::Value::String(s) => s.clone(),
                v => v.to_string(),
            };
            let kind = serde_json::to_value(r.gold.kind).expect("gold kind serializes");
            let mode = serde_json::to_value(r.judge_mode).expect("judge mode serializes");
            w.write_record([
                r.problem_id.as_str(),
                r.predicted.as_deref().unwrap_or(""),
                kind.as_str().unwrap_or_default(),
                &gold_value,
                if r.correct { "true" } else { "false" },
                mode.as_str().unwrap_or_default(),
                &size.to_string(),
            ])
            .expect("in-memory csv write");
        }
        Ok(String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8"))
    }
}
