//! The evolution loop: decompose, retrieve or synthesize per sub-goal,
//! verify and register new tools, run the chain, fall back when needed.

mod chain;
mod trace;

pub use chain::{execute_chain, fallback, question_quantities, ChainError, ChainLink, ChainOutput};
pub use trace::{
    ExecutionTrace, FinalAction, RefinementEvent, SolveResult, StepAction, StepRecord,
    VerificationSummary,
};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{judge, EvalRecord, Gold, JudgeInput, JudgeStrategy};
use crate::registry::{AtomicTool, Origin, ToolLibrary, ToolTestExample};
use crate::retrieval::{
    Embedder, IdentityReranker, Reranker, RetrievalDecision, Retriever, DEFAULT_TAU_RET,
    DEFAULT_TOP_K,
};
use crate::synthesis::{
    atomic_decompose, decompose, scan_source, synthesize_tool, ModelClient, ProposedTool, StepSlot,
    SubGoal, SynthesisError, DEFAULT_TEMPERATURE,
};
use crate::verification::{
    dedup_check_embedding, verify, DedupDecision, DomainPredicate, Sandbox, SandboxRequest,
    VerificationReport, VerifyLimits,
};

pub const DEFAULT_TAU_DUP: f64 = 0.8;
pub const DEFAULT_CAPACITY: usize = 500;
pub const DEFAULT_MIN_USAGE: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("cannot read corpus: {0}")]
    CorpusIo(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub tau_ret: f64,
    pub tau_dup: f64,
    pub top_k: usize,
    pub capacity: usize,
    pub min_usage: u64,
    pub lambda: f64,
    pub temperature: f64,
    pub timeout_ms: u64,
    pub memory_cap_mb: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            tau_ret: DEFAULT_TAU_RET,
            tau_dup: DEFAULT_TAU_DUP,
            top_k: DEFAULT_TOP_K,
            capacity: DEFAULT_CAPACITY,
            min_usage: DEFAULT_MIN_USAGE,
            lambda: 0.0,
            temperature: DEFAULT_TEMPERATURE,
            timeout_ms: crate::verification::sandbox::DEFAULT_TIMEOUT_MS,
            memory_cap_mb: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.tau_ret) {
            return bad("tau_ret must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau_dup) {
            return bad("tau_dup must lie in [0, 1]");
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1");
        }
        if self.capacity == 0 {
            return bad("capacity must be at least 1");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be a finite value >= 0");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a finite value >= 0");
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive");
        }
        Ok(())
    }

    pub fn limits(&self) -> VerifyLimits {
        VerifyLimits {
            timeout_ms: self.timeout_ms,
            memory_cap_mb: self.memory_cap_mb,
            ..VerifyLimits::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub question: String,
    pub gold: Gold,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

/// Parses a JSON-lines corpus. Blank lines are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<Problem>, EngineError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EngineError::Corpus {
            line: i + 1,
            message,
        };
        let p: Problem = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if p.question.trim().is_empty() {
            return Err(err("question is empty".into()));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Problem>, EngineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EngineError::CorpusIo(format!("{}: {e}", path.display())))?;
    parse_corpus(&text)
}

/// Judges each result against its problem's gold answer.
pub fn evaluate(
    problems: &[Problem],
    results: &[SolveResult],
    strategy: &JudgeStrategy<'_>,
) -> Vec<EvalRecord> {
    problems
        .iter()
        .zip(results)
        .map(|(p, r)| {
            judge(
                JudgeInput {
                    problem_id: p.id.clone(),
                    predicted: r.answer.clone(),
                    gold: p.gold.clone(),
                },
                strategy,
            )
        })
        .collect()
}

/// Output of [`Engine::run_stream`].
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub results: Vec<SolveResult>,
    pub library: ToolLibrary,
    /// Library size after each problem.
    pub library_sizes: Vec<usize>,
}

/// Errors that abort a solve with `Failed`.
#[derive(Debug, Error)]
enum Abort {
    #[error("{0}")]
    Provider(String),
    #[error("{0}")]
    Sandbox(String),
    #[error("{0}")]
    Embedding(String),
}

// Short-lived; boxing the record buys nothing.
#[allow(clippy::large_enum_variant)]
enum StepOutcome {
    Record(StepRecord, Option<ChainLink>),
    Abort(Abort),
}

pub struct Engine<'a> {
    config: EngineConfig,
    client: &'a ModelClient,
    desc_embedder: &'a dyn Embedder,
    code_embedder: &'a dyn Embedder,
    sandbox: &'a dyn Sandbox,
    reranker: &'a dyn Reranker,
    domain_check: Option<&'a dyn DomainPredicate>,
}

static IDENTITY_RERANKER: IdentityReranker = IdentityReranker;

impl<'a> Engine<'a> {
    /// One embedder serves both descriptions and code; see
    /// [`Engine::with_code_embedder`].
    pub fn new(
        config: EngineConfig,
        client: &'a ModelClient,
        embedder: &'a dyn Embedder,
        sandbox: &'a dyn Sandbox,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        Ok(Self {
            config,
            client,
            desc_embedder: embedder,
            code_embedder: embedder,
            sandbox,
            reranker: &IDENTITY_RERANKER,
            domain_check: None,
        })
    }

    pub fn with_code_embedder(mut self, embedder: &'a dyn Embedder) -> Self {
        self.code_embedder = embedder;
        self
    }

    pub fn with_reranker(mut self, reranker: &'a dyn Reranker) -> Self {
        self.reranker = reranker;
        self
    }

    pub fn with_domain_check(mut self, check: &'a dyn DomainPredicate) -> Self {
        self.domain_check = Some(check);
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// An empty library matching this engine's embedder and capacity.
    pub fn empty_library(&self) -> ToolLibrary {
        ToolLibrary::new(
            self.config.capacity,
            self.config.min_usage,
            self.desc_embedder.identity(),
            self.desc_embedder.dim(),
        )
    }

    /// Solves one problem, evolving `library` in place. Library changes made
    /// before a failure are kept.
    pub fn solve(&self, problem: &Problem, library: &mut ToolLibrary) -> SolveResult {
        let before = library.len();
        let mut trace = ExecutionTrace {
            problem_id: problem.id.clone(),
            steps: Vec::new(),
            final_action: FinalAction::Failed,
            fallback_reason: None,
        };
        let finish = |trace: ExecutionTrace,
                      answer: Option<String>,
                      error: Option<String>,
                      lib: &ToolLibrary| {
            SolveResult {
                problem_id: problem.id.clone(),
                answer,
                trace,
                library_before_size: before,
                library_after_size: lib.len(),
                error,
            }
        };

        let plan = match decompose(self.client, &problem.question) {
            Ok(plan) => Some(plan),
            Err(SynthesisError::Provider(e)) => {
                return finish(trace, None, Some(e.to_string()), library)
            }
            Err(e) => {
                trace.fallback_reason = Some(e.to_string());
                None
            }
        };

        if let Some(plan) = plan {
            let mut chain: Vec<ChainLink> = Vec::new();
            for goal in &plan.subtasks {
                match self.solve_subgoal(problem, goal, &chain, library) {
                    StepOutcome::Record(record, link) => {
                        trace.steps.push(record);
                        chain.extend(link);
                    }
                    StepOutcome::Abort(e) => {
                        return finish(trace, None, Some(e.to_string()), library)
                    }
                }
            }
            match execute_chain(
                &problem.question,
                &chain,
                &plan,
                self.sandbox,
                self.client,
                self.config.timeout_ms,
            ) {
                Ok(out) => {
                    for (step, value) in out.results {
                        if let Some(r) = trace.steps.iter_mut().find(|r| r.step == step) {
                            r.intermediate_result = Some(value);
                        }
                    }
                    trace.final_action = FinalAction::ChainAnswer;
                    return finish(trace, Some(out.answer), None, library);
                }
                Err(e) => trace.fallback_reason = Some(e.to_string()),
            }
        }

        match fallback(&problem.question, self.client) {
            Ok(answer) => {
                trace.final_action = FinalAction::FallbackAnswer;
                finish(trace, Some(answer), None, library)
            }
            Err(e) => finish(trace, None, Some(e.to_string()), library),
        }
    }

    fn solve_subgoal(
        &self,
        problem: &Problem,
        goal: &SubGoal,
        chain: &[ChainLink],
        library: &mut ToolLibrary,
    ) -> StepOutcome {
        let retriever = Retriever::new(self.desc_embedder, self.reranker);
        let (decision, _) = match retriever.decide(
            library,
            &goal.description,
            self.config.top_k,
            self.config.tau_ret,
        ) {
            Ok(d) => d,
            Err(e) => return StepOutcome::Abort(Abort::Embedding(e.to_string())),
        };
        let best_score = match decision {
            RetrievalDecision::Matched { tool_id, score } => {
                library
                    .record_hit(&tool_id)
                    .expect("matched tool is in the library");
                let tool = library
                    .get(&tool_id)
                    .expect("matched tool is in the library");
                let link = ChainLink {
                    step: goal.step,
                    sub_question: goal.description.clone(),
                    tool_name: tool.name.clone(),
                    source: tool.source.clone(),
                    description: tool.description.clone(),
                };
                let record = StepRecord::new(
                    goal.step,
                    &goal.description,
                    StepAction::Retrieved { tool_id, score },
                );
                return StepOutcome::Record(record, Some(link));
            }
            RetrievalDecision::Missed { best_score } => best_score,
        };

        let prior: Vec<StepSlot> = chain
            .iter()
            .map(|l| StepSlot {
                step: l.step,
                sub_question: l.sub_question.clone(),
                code: Some(l.source.clone()),
                result: None,
            })
            .collect();
        let mut record =
            StepRecord::new(goal.step, &goal.description, StepAction::VerificationFailed);
        record.best_score = best_score;

        let output = match synthesize_tool(self.client, &problem.question, goal, &prior) {
            Ok(o) => o,
            Err(SynthesisError::Provider(e)) => {
                return StepOutcome::Abort(Abort::Provider(e.to_string()))
            }
            Err(e) => {
                record.diagnostics.push(e.to_string());
                return StepOutcome::Record(record, None);
            }
        };
        let Some(proposed) = output
            .tools
            .iter()
            .find(|t| t.sub_question.trim() == goal.description.trim())
            .or(output.tools.first())
        else {
            record.action = StepAction::FallbackStep;
            return StepOutcome::Record(record, None);
        };

        let limits = self.config.limits();
        let report = match verify(proposed, self.sandbox, &limits, self.domain_check) {
            Ok(r) => r,
            Err(e) => return StepOutcome::Abort(Abort::Sandbox(e.to_string())),
        };
        record.verification = Some(VerificationSummary::from(&report));
        if !report.overall {
            return StepOutcome::Record(record, None);
        }

        let candidates = match atomic_decompose(proposed) {
            Ok(c) => c,
            Err(e) => {
                record.diagnostics.push(e.to_string());
                return StepOutcome::Record(record, None);
            }
        };
        for candidate in &candidates {
            match self.refine_candidate(candidate, proposed, &report, library) {
                Ok(event) => {
                    if candidate.name == proposed.name || candidates.len() == 1 {
                        match &event {
                            RefinementEvent::Registered { tool_id, .. } => {
                                record.action = StepAction::Evolved {
                                    tool_id: tool_id.clone(),
                                }
                            }
                            RefinementEvent::Duplicate { existing_id, .. } => {
                                record.action = StepAction::DuplicateCredited {
                                    existing_id: existing_id.clone(),
                                }
                            }
                            RefinementEvent::Rejected { .. } => {}
                        }
                    }
                    record.refinement.push(event);
                }
                Err(abort) => return StepOutcome::Abort(abort),
            }
        }
        if record.action == StepAction::VerificationFailed {
            // Only reachable when the parent's own candidate was not kept.
            record.action = match record.refinement.iter().find_map(|e| match e {
                RefinementEvent::Registered { tool_id, .. } => Some(StepAction::Evolved {
                    tool_id: tool_id.clone(),
                }),
                RefinementEvent::Duplicate { existing_id, .. } => {
                    Some(StepAction::DuplicateCredited {
                        existing_id: existing_id.clone(),
                    })
                }
                RefinementEvent::Rejected { .. } => None,
            }) {
                Some(a) => a,
                None => {
                    record
                        .diagnostics
                        .push("no atomic candidate survived refinement".into());
                    record.pruned = library.prune();
                    return StepOutcome::Record(record, None);
                }
            };
        }
        record.pruned = library.prune();
        let link = ChainLink {
            step: goal.step,
            sub_question: goal.description.clone(),
            tool_name: proposed.name.clone(),
            source: proposed.source.clone(),
            description: proposed.text_description.clone(),
        };
        StepOutcome::Record(record, Some(link))
    }

    /// Verifies one atomic candidate on its own, then registers it or
    /// credits its nearest duplicate.
    fn refine_candidate(
        &self,
        candidate: &ProposedTool,
        parent: &ProposedTool,
        parent_report: &VerificationReport,
        library: &mut ToolLibrary,
    ) -> Result<RefinementEvent, Abort> {
        let name = candidate.name.clone();
        let report = if candidate.source == parent.source {
            parent_report.clone()
        } else if candidate.test_example.input.is_empty() && candidate.test_example.result.is_null()
        {
            self.check_only(candidate)?
        } else {
            verify(
                candidate,
                self.sandbox,
                &self.config.limits(),
                self.domain_check,
            )
            .map_err(|e| Abort::Sandbox(e.to_string()))?
        };
        if !report.overall {
            return Ok(RefinementEvent::Rejected {
                name,
                diagnostics: report.diagnostics,
            });
        }

        let description = if candidate.text_description.trim().is_empty() {
            candidate.sub_question.clone()
        } else {
            candidate.text_description.clone()
        };
        let desc_text = if candidate.sub_question.trim().is_empty() {
            description.clone()
        } else {
            format!("{}\n{description}", candidate.sub_question)
        };
        let desc_embedding = self
            .desc_embedder
            .embed(&desc_text)
            .map_err(|e| Abort::Embedding(e.to_string()))?;
        // Similarity is judged on the candidate's own definition; helpers it
        // carries along would otherwise make every caller look like a copy.
        let own_code = scan_source(&candidate.source)
            .0
            .into_iter()
            .find(|b| b.name == candidate.name)
            .map_or_else(|| candidate.source.clone(), |b| b.text);
        let code_embedding = self
            .code_embedder
            .embed(&own_code)
            .map_err(|e| Abort::Embedding(e.to_string()))?;

        match dedup_check_embedding(&code_embedding, library, self.config.tau_dup) {
            DedupDecision::Reject { nearest_id, score } => {
                library
                    .record_hit(&nearest_id)
                    .expect("nearest tool is in the library");
                Ok(RefinementEvent::Duplicate {
                    name,
                    existing_id: nearest_id,
                    score,
                })
            }
            DedupDecision::Accept => {
                let tool_id = format!("{}-{:04}", candidate.name, library.next_seq());
                let tool = AtomicTool {
                    id: tool_id.clone(),
                    name: candidate.name.clone(),
                    description,
                    io_description: candidate.io_description.clone(),
                    source: candidate.source.clone(),
                    test_example: ToolTestExample {
                        input: candidate.test_example.input.clone(),
                        expected: candidate.test_example.result.clone(),
                    },
                    usage_count: 1,
                    origin: Origin::Evolved,
                    created_seq: 0,
                    desc_embedding,
                    code_embedding,
                };
                match library.register(tool) {
                    Ok(_) => Ok(RefinementEvent::Registered { name, tool_id }),
                    Err(e) => Ok(RefinementEvent::Rejected {
                        name,
                        diagnostics: vec![e.to_string()],
                    }),
                }
            }
        }
    }

    /// Syntax gate only, for split-off helpers that carry no test example of
    /// their own. Their code ran as part of the verified parent.
    fn check_only(&self, candidate: &ProposedTool) -> Result<VerificationReport, Abort> {
        let mut req =
            SandboxRequest::check(&candidate.source, &candidate.name, self.config.timeout_ms);
        req.memory_cap_mb = self.config.memory_cap_mb;
        let resp = self
            .sandbox
            .execute(&req)
            .map_err(|e| Abort::Sandbox(e.to_string()))?;
        let mut report = VerificationReport {
            syntax_ok: resp.ok,
            exec_ok: resp.ok,
            domain_ok: resp.ok,
            overall: resp.ok,
            diagnostics: Vec::new(),
            test_result: None,
            durations: Default::default(),
        };
        if !resp.ok {
            report.exec_ok = false;
            report.domain_ok = false;
            report
                .diagnostics
                .push(format!("syntax: {}", resp.error.unwrap_or_default()));
        }
        Ok(report)
    }

    /// Folds [`Engine::solve`] over `problems` in order.
    pub fn run_stream(&self, problems: &[Problem], mut library: ToolLibrary) -> StreamOutcome {
        let mut results = Vec::with_capacity(problems.len());
        let mut sizes = Vec::with_capacity(problems.len());
        for p in problems {
            let r = self.solve(p, &mut library);
            if let Some(e) = &r.error {
                tracing::warn!(problem = %p.id, error = %e, "problem failed");
            }
            sizes.push(library.len());
            results.push(r);
        }
        StreamOutcome {
            results,
            library,
            library_sizes: sizes,
        }
    }
}
