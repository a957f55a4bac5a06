//! Answer judging.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::MetricsError;
use crate::synthesis::{ModelClient, Prompt};

pub const DEFAULT_RTOL: f64 = 1e-5;
pub const DEFAULT_ATOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldKind {
    Numeric,
    Symbolic,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gold {
    pub kind: GoldKind,
    pub value: Value,
}

impl Gold {
    pub fn numeric(value: f64) -> Self {
        Self {
            kind: GoldKind::Numeric,
            value: Value::from(value),
        }
    }

    pub fn symbolic(value: &str) -> Self {
        Self {
            kind: GoldKind::Symbolic,
            value: Value::from(value),
        }
    }

    pub fn text(value: &str) -> Self {
        Self {
            kind: GoldKind::Text,
            value: Value::from(value),
        }
    }

    fn as_text(&self) -> String {
        match &self.value {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JudgeMode {
    NumericLocal,
    ExactSymbolic,
    ProviderJudge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub problem_id: String,
    pub predicted: Option<String>,
    pub gold: Gold,
    pub correct: bool,
    pub judge_mode: JudgeMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// `|p - g| <= max(rtol * |g|, atol)`. Non-finite inputs never match.
pub fn judge_numeric(predicted: f64, gold: f64, rtol: f64, atol: f64) -> bool {
    if !predicted.is_finite() || !gold.is_finite() {
        return false;
    }
    (predicted - gold).abs() <= (rtol * gold.abs()).max(atol)
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[-+]?(?:(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?").unwrap()
    })
}

fn to_f64(token: &str) -> Option<f64> {
    let cleaned: String = token.chars().filter(|c| *c != ',').collect();
    cleaned.parse::<f64>().ok()
}

/// Parses a whole string as one number, accepting scientific notation and
/// comma digit grouping.
pub fn parse_number(text: &str) -> Result<f64, MetricsError> {
    let t = text.trim().replace('\u{2212}', "-");
    let re = number_regex();
    match re.find(&t) {
        Some(m) if m.start() == 0 && m.end() == t.len() => {
            to_f64(m.as_str()).ok_or_else(|| MetricsError::UnparseableNumber(text.to_string()))
        }
        _ => Err(MetricsError::UnparseableNumber(text.to_string())),
    }
}

/// The last number appearing in free text. Exponents written with `^`
/// (as in `cm^2`) are unit notation and are skipped.
pub fn extract_last_number(text: &str) -> Option<f64> {
    let t = text.replace('\u{2212}', "-");
    let m = number_regex()
        .find_iter(&t)
        .filter(|m| !t[..m.start()].ends_with('^'))
        .last()?;
    let mut token = m.as_str();
    // A sign glued to a preceding word ("step-3") is a hyphen, not a sign.
    if token.starts_with(['-', '+']) {
        let prev = t[..m.start()].chars().next_back();
        if prev.is_some_and(|c| c.is_alphanumeric()) {
            token = &token[1..];
        }
    }
    to_f64(token)
}

/// Symbolic answers compare with all whitespace removed, case-folded.
pub fn normalize_symbolic(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Text answers compare with whitespace runs collapsed, case-folded.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone)]
pub struct JudgeInput {
    pub problem_id: String,
    pub predicted: Option<String>,
    pub gold: Gold,
}

pub enum JudgeStrategy<'a> {
    /// Numeric tolerance or normalized exact match depending on the gold kind.
    Local { rtol: f64, atol: f64 },
    /// Ask a model a fixed yes/no question.
    Provider(&'a ModelClient),
}

impl Default for JudgeStrategy<'_> {
    fn default() -> Self {
        Self::Local {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
        }
    }
}

const JUDGE_SYSTEM: &str = "[SYSTEM]\nYou are a strict grader. Decide whether the candidate answer is equivalent to the reference answer.\nNumerical answers are equivalent when they agree to a relative tolerance of 1e-5 after unit conversion.\nReply with exactly one word: yes or no.";

pub fn judge_prompt(question_id: &str, predicted: &str, gold: &Gold) -> Prompt {
    Prompt::new(
        JUDGE_SYSTEM,
        format!(
            "[INPUT]\nProblem id: {question_id}\nReference answer: {}\nCandidate answer: {predicted}",
            gold.as_text()
        ),
    )
}

pub fn judge(input: JudgeInput, strategy: &JudgeStrategy<'_>) -> EvalRecord {
    let JudgeInput {
        problem_id,
        predicted,
        gold,
    } = input;
    let mode = match strategy {
        JudgeStrategy::Provider(_) => JudgeMode::ProviderJudge,
        JudgeStrategy::Local { .. } if gold.kind == GoldKind::Numeric => JudgeMode::NumericLocal,
        JudgeStrategy::Local { .. } => JudgeMode::ExactSymbolic,
    };
    let Some(text) = predicted.as_deref() else {
        return EvalRecord {
            problem_id,
            predicted,
            gold,
            correct: false,
            judge_mode: mode,
            diagnostic: Some("no prediction".into()),
        };
    };

    let (correct, diagnostic) = match strategy {
        JudgeStrategy::Local { rtol, atol } => match gold.kind {
            GoldKind::Numeric => {
                let g = match &gold.value {
                    Value::Number(n) => n
                        .as_f64()
                        .ok_or_else(|| MetricsError::UnparseableNumber(n.to_string())),
                    Value::String(s) => parse_number(s),
                    other => Err(MetricsError::UnparseableNumber(other.to_string())),
                };
                match (g, extract_last_number(text)) {
                    (Ok(g), Some(p)) => (judge_numeric(p, g, *rtol, *atol), None),
                    (Err(e), _) => (false, Some(format!("gold: {e}"))),
                    (_, None) => (false, Some("no number in prediction".to_string())),
                }
            }
            GoldKind::Symbolic => (
                normalize_symbolic(text) == normalize_symbolic(&gold.as_text()),
                None,
            ),
            GoldKind::Text => (
                normalize_text(text) == normalize_text(&gold.as_text()),
                None,
            ),
        },
        JudgeStrategy::Provider(client) => {
            match client.complete(&judge_prompt(&problem_id, text, &gold)) {
                Ok(reply) => {
                    let first = reply
                        .split_whitespace()
                        .next()
                        .unwrap_or("")
                        .trim_matches(|c: char| !c.is_alphanumeric())
                        .to_lowercase();
                    (first == "yes", None)
                }
                Err(e) => (false, Some(format!("judge provider: {e}"))),
            }
        }
    };
    EvalRecord {
        problem_id,
        predicted,
        gold,
        correct,
        judge_mode: mode,
        diagnostic,
    }
}
