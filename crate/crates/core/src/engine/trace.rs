use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::verification::VerificationReport;

/// What happened to one sub-goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum StepAction {
    Retrieved {
        tool_id: String,
        score: f64,
    },
    Evolved {
        tool_id: String,
    },
    DuplicateCredited {
        existing_id: String,
    },
    VerificationFailed,
    /// The model answered the sub-goal without proposing a tool.
    FallbackStep,
}

/// Gate outcomes without timings, so traces stay byte-stable across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub syntax_ok: bool,
    pub exec_ok: bool,
    pub domain_ok: bool,
    pub overall: bool,
    pub diagnostics: Vec<String>,
}

impl From<&VerificationReport> for VerificationSummary {
    fn from(r: &VerificationReport) -> Self {
        Self {
            syntax_ok: r.syntax_ok,
            exec_ok: r.exec_ok,
            domain_ok: r.domain_ok,
            overall: r.overall,
            diagnostics: r.diagnostics.clone(),
        }
    }
}

/// Fate of one atomic candidate split from a verified tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum RefinementEvent {
    Registered {
        name: String,
        tool_id: String,
    },
    Duplicate {
        name: String,
        existing_id: String,
        score: f64,
    },
    Rejected {
        name: String,
        diagnostics: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub subgoal: String,
    pub action: StepAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refinement: Vec<RefinementEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pruned: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate_result: Option<Value>,
}

impl StepRecord {
    pub(crate) fn new(step: u32, subgoal: &str, action: StepAction) -> Self {
        Self {
            step,
            subgoal: subgoal.to_string(),
            action,
            best_score: None,
            verification: None,
            refinement: Vec::new(),
            pruned: Vec::new(),
            diagnostics: Vec::new(),
            intermediate_result: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalAction {
    ChainAnswer,
    FallbackAnswer,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub problem_id: String,
    pub steps: Vec<StepRecord>,
    pub final_action: FinalAction,
    /// Why the tool path was abandoned, when it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
}

impl ExecutionTrace {
    /// Pretty JSON with a trailing newline; field order is fixed by the types.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub problem_id: String,
    pub answer: Option<String>,
    pub trace: ExecutionTrace,
    pub library_before_size: usize,
    pub library_after_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
