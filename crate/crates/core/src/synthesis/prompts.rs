//! Rendering of the fixed templates into [`Prompt`]s.

use serde::Serialize;
use serde_json::Value;

use super::templates::{DECOMPOSE_TEMPLATE, SYNTHESIS_TEMPLATE, TOOLCALL_TEMPLATE};
use super::Prompt;

const QUERY_SLOT: &str = "{query}";
const MAIN_QUESTION_SLOT: &str = "{main_question}";
const STEPS_SLOT_LINE: &str = "{(step_i, sub_question_i, code_i)}  # repeated for i=1..n";
const TOOLCALL_PROBLEM_SLOT: &str = "{sub_question_or_operation}";
const TOOLCALL_CATALOG_SLOT: &str = "{tool_catalog_with_signatures}";

/// One `(step, sub_question, code)` entry of the synthesis prompt. `code` is
/// `None` for sub-questions that still lack a tool; `result` carries an
/// already computed intermediate value when one exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepSlot {
    pub step: u32,
    pub sub_question: String,
    pub code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
}

impl StepSlot {
    pub fn missing(step: u32, sub_question: impl Into<String>) -> Self {
        Self {
            step,
            sub_question: sub_question.into(),
            code: None,
            result: None,
        }
    }

    /// Single-line JSON rendering used inside the prompt.
    pub fn render(&self) -> String {
        serde_json::to_string(self).expect("step slot serializes")
    }
}

/// Splits a template at the first line starting with `marker` into the
/// system part and the slot-bearing user part.
fn split_template<'a>(template: &'a str, marker: &str) -> (&'a str, &'a str) {
    let needle = format!("\n\n{marker}");
    let at = template
        .find(&needle)
        .unwrap_or_else(|| panic!("template lacks {marker} section"));
    (&template[..at], &template[at + 2..])
}

fn fill(user_template: &str, slot: &str, value: &str) -> String {
    // Placeholders appear exactly once; splitting keeps substituted text from
    // being rescanned for later slots.
    let (head, tail) = user_template
        .split_once(slot)
        .unwrap_or_else(|| panic!("template lacks slot {slot}"));
    format!("{head}{value}{tail}")
}

pub fn decomposition_prompt(query: &str) -> Prompt {
    let (system, user) = split_template(DECOMPOSE_TEMPLATE, "[USER]");
    Prompt::new(system, fill(user, QUERY_SLOT, query))
}

pub fn synthesis_prompt(main_question: &str, slots: &[StepSlot]) -> Prompt {
    let (system, user) = split_template(SYNTHESIS_TEMPLATE, "[INPUT]");
    let steps = slots
        .iter()
        .map(StepSlot::render)
        .collect::<Vec<_>>()
        .join("\n");
    // Fill the step list first: the main question is free text and must not
    // be searched for the step placeholder.
    let (head, tail) = user
        .split_once(STEPS_SLOT_LINE)
        .expect("synthesis template step slot");
    let (q_head, q_tail) = head
        .split_once(MAIN_QUESTION_SLOT)
        .expect("synthesis template question slot");
    Prompt::new(
        system,
        format!("{q_head}{main_question}{q_tail}{steps}{tail}"),
    )
}

pub fn toolcall_prompt(sub_question: &str, catalog: &str) -> Prompt {
    let (system, user) = split_template(TOOLCALL_TEMPLATE, "[USER]");
    let (head, tail) = user
        .split_once(TOOLCALL_PROBLEM_SLOT)
        .expect("tool-call problem slot");
    let (c_head, c_tail) = tail
        .split_once(TOOLCALL_CATALOG_SLOT)
        .expect("tool-call catalog slot");
    Prompt::new(
        system,
        format!("{head}{sub_question}{c_head}{catalog}{c_tail}"),
    )
}

const FALLBACK_SYSTEM: &str = "[SYSTEM]\nYou are an expert scientist. Solve the problem by careful step-by-step reasoning without calling tools or writing code.\nState all physical quantities with SI units.\n\n[OUTPUT FORMAT]\nEnd with the final answer wrapped in <answer> ... </answer>.";

/// Reasoning-only prompt used when the tool path fails.
pub fn fallback_prompt(question: &str) -> Prompt {
    Prompt::new(FALLBACK_SYSTEM, format!("[USER]\n{question}"))
}

const SPLIT_SYSTEM: &str = "[SYSTEM]\nYou refactor verified Python tools into independent atomic functions.\nEach atomic function must be self-contained (include its own imports and constants), perform one computation, and have a snake_case name and a docstring.\n\n[STRICT OUTPUT FORMAT]\nOutput a JSON list wrapped in <code> ... </code> using the same object schema as the input tool. No extra text.";

/// Prompt for optional model-assisted atomic splitting.
pub fn split_prompt(tool_json: &str) -> Prompt {
    Prompt::new(SPLIT_SYSTEM, format!("[INPUT]\n{tool_json}"))
}
