//! Parsers for model output. Wrapping (code fences, surrounding prose) is
//! tolerated; the schema inside is not.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::SynthesisError;
use crate::registry::{is_snake_case, IoDescription};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGoal {
    pub step: u32,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionPlan {
    pub original_problem: String,
    pub subtasks: Vec<SubGoal>,
    /// Repairs applied while parsing (e.g. step renumbering).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DecompositionPlan {
    /// The plan in the analyzer's output schema.
    pub fn to_schema_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "original_problem": self.original_problem,
            "subtasks": self.subtasks,
        }))
        .expect("plan serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProposedTestExample {
    pub input: Map<String, Value>,
    #[serde(default)]
    pub result: Value,
}

/// A generated tool as described by the synthesis output schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedTool {
    #[serde(default)]
    pub sub_question: String,
    pub name: String,
    #[serde(rename = "code")]
    pub source: String,
    #[serde(default)]
    pub text_description: String,
    #[serde(default)]
    pub io_description: IoDescription,
    pub test_example: ProposedTestExample,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthesisOutput {
    pub tools: Vec<ProposedTool>,
    pub answer: Option<String>,
}

/// Removes Markdown fence lines (```` ``` ````, ```` ```json ````).
fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The first `{...}` in `text` that parses as a JSON object.
pub fn extract_json_object(text: &str) -> Option<Map<String, Value>> {
    let cleaned = strip_fences(text);
    for (i, _) in cleaned.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&cleaned[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(obj))) = stream.next() {
            return Some(obj);
        }
    }
    None
}

pub fn parse_decomposition_json(text: &str) -> Result<DecompositionPlan, SynthesisError> {
    let malformed = |m: &str| SynthesisError::MalformedDecomposition(m.to_string());
    let obj = extract_json_object(text).ok_or_else(|| malformed("no JSON object found"))?;
    let original_problem = match obj.get("original_problem") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(malformed("`original_problem` is not a string")),
    };
    let entries = match obj.get("subtasks") {
        None => return Err(malformed("missing `subtasks`")),
        Some(Value::Array(a)) => a,
        Some(_) => return Err(malformed("`subtasks` is not a list")),
    };
    if entries.is_empty() {
        return Err(SynthesisError::DecompositionEmpty);
    }

    let mut declared = Vec::with_capacity(entries.len());
    let mut subtasks = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let entry = entry
            .as_object()
            .ok_or_else(|| malformed(&format!("subtask {} is not an object", i + 1)))?;
        let description = match entry.get("description") {
            Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
            Some(Value::String(_)) => {
                return Err(malformed(&format!(
                    "subtask {} has an empty description",
                    i + 1
                )))
            }
            _ => {
                return Err(malformed(&format!(
                    "subtask {} lacks a string description",
                    i + 1
                )))
            }
        };
        let step = match entry.get("step") {
            Some(Value::Number(n)) => n.as_u64(),
            Some(Value::String(s)) => s.trim().parse::<u64>().ok(),
            _ => None,
        };
        declared.push(step);
        subtasks.push(SubGoal {
            step: u32::try_from(i + 1).expect("subtask count fits u32"),
            description,
        });
    }

    let mut warnings = Vec::new();
    let consecutive = declared
        .iter()
        .enumerate()
        .all(|(i, s)| *s == Some(i as u64 + 1));
    if !consecutive {
        let shown: Vec<String> = declared
            .iter()
            .map(|s| s.map_or_else(|| "?".to_string(), |v| v.to_string()))
            .collect();
        warnings.push(format!(
            "renumbered steps [{}] as 1..{}",
            shown.join(", "),
            subtasks.len()
        ));
    }
    Ok(DecompositionPlan {
        original_problem,
        subtasks,
        warnings,
    })
}

/// Text between the first `open` tag and the following `close` tag.
/// `Ok(None)` when the block is absent, `Err(())` when it is unterminated.
fn tagged_block<'a>(text: &'a str, open: &str, close: &str) -> Result<Option<&'a str>, ()> {
    let Some(start) = text.find(open) else {
        return Ok(None);
    };
    let body = &text[start + open.len()..];
    match body.find(close) {
        Some(end) => Ok(Some(&body[..end])),
        None => Err(()),
    }
}

fn parse_tool(value: &Value, index: usize) -> Result<ProposedTool, SynthesisError> {
    let malformed =
        |m: String| SynthesisError::MalformedToolJson(format!("tool {}: {m}", index + 1));
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("not an object".into()))?;
    for key in ["name", "code", "test_example"] {
        if !obj.contains_key(key) {
            return Err(malformed(format!("missing `{key}`")));
        }
    }
    // The schema asks for a string result but real outputs often use a bare
    // number, object, or null; all are accepted as the expected value.
    let tool: ProposedTool =
        serde_json::from_value(value.clone()).map_err(|e| malformed(e.to_string()))?;
    if !is_snake_case(&tool.name) {
        return Err(malformed(format!("name `{}` is not snake_case", tool.name)));
    }
    if tool.source.trim().is_empty() {
        return Err(malformed("empty code".into()));
    }
    Ok(tool)
}

/// Extracts tools from the first `<code>` block and the text of the first
/// `<answer>` block. Either may be absent.
pub fn parse_synthesis_output(text: &str) -> Result<SynthesisOutput, SynthesisError> {
    let code = tagged_block(text, "<code>", "</code>")
        .map_err(|()| SynthesisError::MalformedToolJson("unterminated <code> block".into()))?;
    let tools = match code {
        None => Vec::new(),
        Some(body) => {
            let body = strip_fences(body);
            let value: Value = serde_json::from_str(body.trim()).map_err(|e| {
                SynthesisError::MalformedToolJson(format!("code block is not JSON: {e}"))
            })?;
            let list = value.as_array().ok_or_else(|| {
                SynthesisError::MalformedToolJson("code block is not a JSON list".into())
            })?;
            list.iter()
                .enumerate()
                .map(|(i, v)| parse_tool(v, i))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let answer = extract_answer(text);
    Ok(SynthesisOutput { tools, answer })
}

/// Trimmed body of the first `<answer>` block. An unterminated block runs to
/// the end of the text.
pub fn extract_answer(text: &str) -> Option<String> {
    let start = text.find("<answer>")? + "<answer>".len();
    let body = &text[start..];
    let body = body.find("</answer>").map_or(body, |end| &body[..end]);
    Some(body.trim().to_string())
}

/// Body of the last `<answer>` block, if any.
pub fn extract_trailing_answer(text: &str) -> Option<String> {
    let start = text.rfind("<answer>")? + "<answer>".len();
    let body = &text[start..];
    let body = body.find("</answer>").map_or(body, |end| &body[..end]);
    Some(body.trim().to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolCall {
    pub name: String,
    pub arguments: Map<String, Value>,
}

fn parse_call(value: &Value) -> Result<ToolCall, SynthesisError> {
    let malformed = |m: &str| SynthesisError::MalformedToolCall(m.to_string());
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("tool call is not an object"))?;
    let function = obj
        .get("function")
        .and_then(Value::as_object)
        .unwrap_or(obj);
    let name = function
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("tool call lacks a function name"))?
        .to_string();
    let arguments = match function.get("arguments") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(Value::String(s)) => match serde_json::from_str::<Value>(s) {
            Ok(Value::Object(m)) => m,
            _ => return Err(malformed("arguments string is not a JSON object")),
        },
        Some(_) => {
            return Err(malformed(
                "arguments are neither an object nor a JSON string",
            ))
        }
    };
    Ok(ToolCall { name, arguments })
}

/// Parses an OpenAI-style tool-call list (bare, or under `tool_calls`).
/// Zero entries yield `None`; more than one is an error.
pub fn parse_tool_call(text: &str) -> Result<Option<ToolCall>, SynthesisError> {
    let cleaned = strip_fences(text);
    let trimmed = cleaned.trim();
    let start = trimmed
        .find(['[', '{'])
        .ok_or_else(|| SynthesisError::MalformedToolCall("no JSON in reply".into()))?;
    let mut stream = serde_json::Deserializer::from_str(&trimmed[start..]).into_iter::<Value>();
    let value = match stream.next() {
        Some(Ok(v)) => v,
        _ => {
            return Err(SynthesisError::MalformedToolCall(
                "reply is not valid JSON".into(),
            ))
        }
    };
    let calls = match value {
        Value::Array(a) => a,
        Value::Object(ref o) if o.contains_key("tool_calls") => match o.get("tool_calls") {
            Some(Value::Array(a)) => a.clone(),
            Some(Value::Null) => Vec::new(),
            _ => {
                return Err(SynthesisError::MalformedToolCall(
                    "`tool_calls` is not a list".into(),
                ))
            }
        },
        Value::Object(_) => vec![value],
        _ => {
            return Err(SynthesisError::MalformedToolCall(
                "reply is not a tool-call list".into(),
            ))
        }
    };
    match calls.as_slice() {
        [] => Ok(None),
        [one] => parse_call(one).map(Some),
        _ => Err(SynthesisError::MalformedToolCall(format!(
            "expected at most one tool call, got {}",
            calls.len()
        ))),
    }
}
