//! Running the assembled tool chain and the reasoning-only fallback.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::synthesis::{
    extract_answer, extract_trailing_answer, fallback_prompt, function_params, parse_tool_call,
    synthesis_prompt, toolcall_prompt, DecompositionPlan, ModelClient, ProviderError, StepSlot,
};
use crate::verification::{find_non_finite, Sandbox, SandboxRequest};

/// One executable link: a verified or retrieved tool bound to a plan step.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLink {
    pub step: u32,
    pub sub_question: String,
    pub tool_name: String,
    pub source: String,
    pub description: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("tool chain is empty")]
    EmptyChain,
    #[error("step {step}: {message}")]
    StepFailed { step: u32, message: String },
    #[error("final synthesis reply has no <answer> block")]
    MissingAnswer,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub answer: String,
    /// `(step, value)` for every executed link, in order.
    pub results: Vec<(u32, Value)>,
}

fn quantity_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\b([A-Za-z_][A-Za-z0-9_]*)\s*(?:=|:)\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)",
        )
        .unwrap()
    })
}

/// `name = number` and `name: number` assignments stated in the question.
pub fn question_quantities(question: &str) -> Map<String, Value> {
    let mut out = Map::new();
    for cap in quantity_regex().captures_iter(question) {
        let Ok(v) = cap[2].parse::<f64>() else {
            continue;
        };
        let value = if v.fract() == 0.0 && v.abs() < 9.0e15 && !cap[2].contains(['.', 'e', 'E']) {
            json!(v as i64)
        } else {
            json!(v)
        };
        out.entry(cap[1].to_string()).or_insert(value);
    }
    out
}

/// Values earlier links produced, addressable by tool name, by `step_<n>`,
/// and (for object results) by each key.
fn known_values(question: &str, prior: &[(u32, String, Value)]) -> Map<String, Value> {
    let mut known = question_quantities(question);
    for (step, name, value) in prior {
        known.insert(name.clone(), value.clone());
        known.insert(format!("step_{step}"), value.clone());
        if let Value::Object(fields) = value {
            for (k, v) in fields {
                known.insert(k.clone(), v.clone());
            }
        }
    }
    known
}

fn catalog_entry(link: &ChainLink, params: &[String]) -> Value {
    let properties: Map<String, Value> = params.iter().map(|p| (p.clone(), json!({}))).collect();
    json!([{
        "type": "function",
        "function": {
            "name": link.tool_name,
            "description": link.description,
            "parameters": {"type": "object", "properties": properties, "required": params},
        }
    }])
}

/// Binds `params` from known values; asks the model for a single tool call
/// when some remain unbound.
fn bind_arguments(
    link: &ChainLink,
    params: &[String],
    known: &Map<String, Value>,
    client: &ModelClient,
) -> Result<Map<String, Value>, ChainError> {
    let mut args = Map::new();
    for p in params {
        if let Some(v) = known.get(p) {
            args.insert(p.clone(), v.clone());
        }
    }
    if args.len() == params.len() {
        return Ok(args);
    }
    let problem = format!(
        "{}\nKnown values: {}",
        link.sub_question,
        serde_json::to_string(known).expect("map serializes")
    );
    let catalog = catalog_entry(link, params).to_string();
    let reply = client.complete_as("toolcall", &toolcall_prompt(&problem, &catalog))?;
    let fail = |message: String| ChainError::StepFailed {
        step: link.step,
        message,
    };
    let call = parse_tool_call(&reply)
        .map_err(|e| fail(e.to_string()))?
        .ok_or_else(|| fail("model declined to call the tool".into()))?;
    if call.name != link.tool_name {
        return Err(fail(format!(
            "model called `{}` instead of `{}`",
            call.name, link.tool_name
        )));
    }
    for (k, v) in call.arguments {
        args.entry(k).or_insert(v);
    }
    Ok(args)
}

/// Runs every link in order, then asks for the final answer with all step
/// code and results filled in.
pub fn execute_chain(
    question: &str,
    chain: &[ChainLink],
    plan: &DecompositionPlan,
    sandbox: &dyn Sandbox,
    client: &ModelClient,
    timeout_ms: u64,
) -> Result<ChainOutput, ChainError> {
    if chain.is_empty() {
        return Err(ChainError::EmptyChain);
    }
    let mut prior: Vec<(u32, String, Value)> = Vec::new();
    for link in chain {
        let fail = |message: String| ChainError::StepFailed {
            step: link.step,
            message,
        };
        let params = function_params(&link.source, &link.tool_name)
            .ok_or_else(|| fail(format!("`{}` is not defined in its source", link.tool_name)))?;
        let known = known_values(question, &prior);
        let args = bind_arguments(link, &params, &known, client)?;
        let resp = sandbox
            .execute(&SandboxRequest::run(
                &link.source,
                &link.tool_name,
                args,
                timeout_ms,
            ))
            .map_err(|e| fail(e.to_string()))?;
        if !resp.ok {
            return Err(fail(resp.error.unwrap_or_default()));
        }
        let value = resp.result.unwrap_or(Value::Null);
        if let Some(bad) = find_non_finite(&value) {
            return Err(fail(format!("non-finite result {bad}")));
        }
        prior.push((link.step, link.tool_name.clone(), value));
    }

    let slots: Vec<StepSlot> = plan
        .subtasks
        .iter()
        .map(|g| {
            let link = chain.iter().find(|l| l.step == g.step);
            StepSlot {
                step: g.step,
                sub_question: g.description.clone(),
                code: link.map(|l| l.source.clone()),
                result: prior
                    .iter()
                    .find(|(s, _, _)| *s == g.step)
                    .map(|(_, _, v)| v.clone()),
            }
        })
        .collect();
    let reply = client.complete_as("answer", &synthesis_prompt(question, &slots))?;
    let answer = extract_answer(&reply).ok_or(ChainError::MissingAnswer)?;
    Ok(ChainOutput {
        answer,
        results: prior.into_iter().map(|(s, _, v)| (s, v)).collect(),
    })
}

/// Single reasoning-only completion. The answer is the trailing `<answer>`
/// block when present, else the whole reply.
pub fn fallback(question: &str, client: &ModelClient) -> Result<String, ProviderError> {
    let reply = client.complete_as("fallback", &fallback_prompt(question))?;
    Ok(extract_trailing_answer(&reply).unwrap_or_else(|| reply.trim().to_string()))
}
