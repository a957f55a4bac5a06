//! Evaluation: answer judging, reuse rates, utility, and seed sampling.

mod judge;
mod report;
mod reuse;
mod sampling;

pub use judge::{
    extract_last_number, judge, judge_numeric, judge_prompt, normalize_symbolic, normalize_text,
    parse_number, EvalRecord, Gold, GoldKind, JudgeInput, JudgeMode, JudgeStrategy, DEFAULT_ATOL,
    DEFAULT_RTOL,
};
pub use report::{MetricsReport, REPORT_TRR_KS};
pub use reuse::{
    cumulative_utility, hit_histogram, trr_at_k, trr_from_hits, trr_stratified, utility_from_flags,
    HitHistogram, StratifiedTrr, HISTOGRAM_BINS,
};
pub use sampling::{kmeans, stratified_seed_sample, SampledItem, MAX_ITERATIONS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("cannot parse `{0}` as a number")]
    UnparseableNumber(String),
    #[error("reuse rate is undefined on an empty library")]
    EmptyLibrary,
    #[error("{records} records but {sizes} library sizes")]
    LengthMismatch { records: usize, sizes: usize },
}
