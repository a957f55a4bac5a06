//! Model-driven generation: problem decomposition, tool synthesis, and
//! atomic splitting, plus the wire-format parsers they rely on.

mod atomic;
mod parse;
mod prompts;
mod provider;
pub mod templates;

pub use atomic::{atomic_decompose, function_params, scan_source, FunctionBlock};
pub use parse::{
    extract_answer, extract_json_object, extract_trailing_answer, parse_decomposition_json,
    parse_synthesis_output, parse_tool_call, DecompositionPlan, ProposedTestExample, ProposedTool,
    SubGoal, SynthesisOutput, ToolCall,
};
pub use prompts::{
    decomposition_prompt, fallback_prompt, split_prompt, synthesis_prompt, toolcall_prompt,
    StepSlot,
};
pub use provider::{
    concatenate, prompt_key, ChatMessage, HttpModelProvider, ModelClient, ModelProvider,
    ModelTranscript, Prompt, ProviderError, RecordingProvider, ScriptedProvider, TranscriptEntry,
    DEFAULT_TEMPERATURE,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("malformed decomposition: {0}")]
    MalformedDecomposition(String),
    #[error("decomposition has no subtasks")]
    DecompositionEmpty,
    #[error("malformed tool JSON: {0}")]
    MalformedToolJson(String),
    #[error("synthesis returned neither a tool nor an answer")]
    SynthesisEmpty,
    #[error("no function definition in tool `{0}`")]
    NoFunctionFound(String),
    #[error("malformed tool call: {0}")]
    MalformedToolCall(String),
}

impl SynthesisError {
    pub fn is_provider_failure(&self) -> bool {
        matches!(self, Self::Provider(ProviderError::Unavailable(_)))
    }
}

/// Asks the analyzer for an ordered list of computational sub-goals.
pub fn decompose(client: &ModelClient, problem: &str) -> Result<DecompositionPlan, SynthesisError> {
    let reply = client.complete_as("decompose", &decomposition_prompt(problem))?;
    parse_decomposition_json(&reply)
}

/// Requests a tool for `subgoal`, passing earlier steps (with their code
/// where a tool exists) as context.
pub fn synthesize_tool(
    client: &ModelClient,
    problem: &str,
    subgoal: &SubGoal,
    prior_steps: &[StepSlot],
) -> Result<SynthesisOutput, SynthesisError> {
    let mut slots = prior_steps.to_vec();
    slots.push(StepSlot::missing(subgoal.step, subgoal.description.clone()));
    let reply = client.complete_as("synthesize", &synthesis_prompt(problem, &slots))?;
    let output = parse_synthesis_output(&reply)?;
    if output.tools.is_empty() && output.answer.is_none() {
        return Err(SynthesisError::SynthesisEmpty);
    }
    Ok(output)
}
