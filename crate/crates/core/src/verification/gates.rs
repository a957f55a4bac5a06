use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::sandbox::{Sandbox, SandboxError, SandboxRequest, DEFAULT_TIMEOUT_MS};
use crate::metrics::{
    extract_last_number, judge_numeric, normalize_text, parse_number, DEFAULT_ATOL, DEFAULT_RTOL,
};
use crate::synthesis::ProposedTool;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyLimits {
    pub timeout_ms: u64,
    pub memory_cap_mb: Option<u64>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for VerifyLimits {
    fn default() -> Self {
        Self {
            timeout_ms: DEFAULT_TIMEOUT_MS,
            memory_cap_mb: None,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDurations {
    pub syntax_ms: u64,
    pub exec_ms: u64,
    pub domain_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub syntax_ok: bool,
    pub exec_ok: bool,
    pub domain_ok: bool,
    pub overall: bool,
    pub diagnostics: Vec<String>,
    /// Value the tool returned on its test input, when it ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_result: Option<Value>,
    pub durations: GateDurations,
}

impl VerificationReport {
    fn new() -> Self {
        Self {
            syntax_ok: false,
            exec_ok: false,
            domain_ok: false,
            overall: false,
            diagnostics: Vec::new(),
            test_result: None,
            durations: GateDurations::default(),
        }
    }

    fn finish(mut self) -> Self {
        self.overall = self.syntax_ok && self.exec_ok && self.domain_ok;
        self
    }
}

/// Extra domain check run after the built-in ones.
pub trait DomainPredicate {
    fn check(&self, tool: &ProposedTool, result: &Value) -> Result<(), String>;
}

const NON_FINITE_WORDS: [&str; 6] = ["nan", "inf", "-inf", "+inf", "infinity", "-infinity"];

/// Finds the first non-finite component. JSON numbers are always finite once
/// parsed, so this catches the string spellings runners emit for NaN and
/// infinities.
pub fn find_non_finite(value: &Value) -> Option<String> {
    match value {
        Value::Number(n) => n.as_f64().filter(|f| !f.is_finite()).map(|f| f.to_string()),
        Value::String(s) => {
            let t = s.trim().to_ascii_lowercase();
            NON_FINITE_WORDS.contains(&t.as_str()).then(|| s.clone())
        }
        Value::Array(items) => items.iter().find_map(find_non_finite),
        Value::Object(map) => map.values().find_map(find_non_finite),
        Value::Null | Value::Bool(_) => None,
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => parse_number(s.trim())
            .ok()
            .or_else(|| extract_last_number(s)),
        _ => None,
    }
}

/// Compares a tool result against the expected test value. Numbers (and
/// numbers embedded in strings such as `"137.19 L/mol"`) use the numeric
/// judge; containers compare element-wise.
pub fn result_matches(actual: &Value, expected: &Value, rtol: f64, atol: f64) -> bool {
    match (actual, expected) {
        (_, Value::Null) => true,
        (Value::Array(a), Value::Array(e)) => {
            a.len() == e.len()
                && a.iter()
                    .zip(e)
                    .all(|(x, y)| result_matches(x, y, rtol, atol))
        }
        (Value::Object(a), Value::Object(e)) => {
            a.len() == e.len()
                && e.iter()
                    .all(|(k, y)| a.get(k).is_some_and(|x| result_matches(x, y, rtol, atol)))
        }
        (Value::String(a), Value::String(e)) if normalize_text(a) == normalize_text(e) => true,
        (_, Value::Number(_) | Value::String(_)) => {
            match (as_number(actual), as_number(expected)) {
                (Some(a), Some(e)) => judge_numeric(a, e, rtol, atol),
                _ => false,
            }
        }
        _ => actual == expected,
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Runs the three gates in order (syntax, execution, domain), stopping at
/// the first failure. `Err` only when the sandbox itself is unavailable.
pub fn verify(
    tool: &ProposedTool,
    sandbox: &dyn Sandbox,
    limits: &VerifyLimits,
    extra: Option<&dyn DomainPredicate>,
) -> Result<VerificationReport, SandboxError> {
    let mut report = VerificationReport::new();
    if tool.name.trim().is_empty() || tool.source.trim().is_empty() {
        report
            .diagnostics
            .push("syntax: tool name or source is empty".into());
        return Ok(report.finish());
    }

    let start = Instant::now();
    let mut check = SandboxRequest::check(&tool.source, &tool.name, limits.timeout_ms);
    check.memory_cap_mb = limits.memory_cap_mb;
    let resp = sandbox.execute(&check)?;
    report.durations.syntax_ms = elapsed_ms(start);
    if !resp.ok {
        report
            .diagnostics
            .push(format!("syntax: {}", resp.error.unwrap_or_default()));
        return Ok(report.finish());
    }
    report.syntax_ok = true;

    let start = Instant::now();
    let mut run = SandboxRequest::run(
        &tool.source,
        &tool.name,
        tool.test_example.input.clone(),
        limits.timeout_ms,
    );
    run.memory_cap_mb = limits.memory_cap_mb;
    let resp = sandbox.execute(&run)?;
    report.durations.exec_ms = elapsed_ms(start);
    if !resp.ok {
        report
            .diagnostics
            .push(format!("exec: {}", resp.error.unwrap_or_default()));
        return Ok(report.finish());
    }
    report.exec_ok = true;
    let result = resp.result.unwrap_or(Value::Null);
    report.test_result = Some(result.clone());

    let start = Instant::now();
    let expected = &tool.test_example.result;
    let domain = if let Some(bad) = find_non_finite(&result) {
        Err(format!("domain: non-finite value {bad}"))
    } else if !result_matches(&result, expected, limits.rtol, limits.atol) {
        Err(format!(
            "domain: result {result} does not match expected {expected}"
        ))
    } else if let Some(p) = extra {
        p.check(tool, &result).map_err(|e| format!("domain: {e}"))
    } else {
        Ok(())
    };
    report.durations.domain_ms = elapsed_ms(start);
    match domain {
        Ok(()) => report.domain_ok = true,
        Err(d) => report.diagnostics.push(d),
    }
    Ok(report.finish())
}
