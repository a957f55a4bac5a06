//! Golden-prompt and parser checks shared by the wire-format tests and the
//! acceptance harness. Each check returns a description of the first
//! mismatch instead of panicking.

use std::sync::Mutex;

use serde_json::{json, Value};
use tte_core::registry::IoDescription;
use tte_core::synthesis::{
    decompose, parse_decomposition_json, parse_synthesis_output, synthesize_tool, toolcall_prompt,
    ChatMessage, DecompositionPlan, ModelClient, ModelProvider, ProposedTestExample, ProposedTool,
    ProviderError, StepSlot, SubGoal, SynthesisError,
};

pub const GOLDEN_DECOMPOSE: &str = include_str!("../golden/decompose.txt");
pub const GOLDEN_SYNTHESIS: &str = include_str!("../golden/synthesis.txt");
pub const GOLDEN_TOOLCALL: &str = include_str!("../golden/toolcall.txt");
pub const GOLDEN_CATALOG: &str = include_str!("../golden/catalog.json");

pub const GOLDEN_QUERY: &str =
    "Calculate the molar mass of a gas with density 1.23 kg/m^3 at pressure 20 kPa and temperature 330 K.";

/// Remembers the last prompt and answers with a fixed reply.
pub struct Capture {
    pub reply: String,
    pub last: Mutex<Option<String>>,
}

impl Capture {
    pub fn new(reply: &str) -> Self {
        Self {
            reply: reply.into(),
            last: Mutex::new(None),
        }
    }
}

impl ModelProvider for Capture {
    fn id(&self) -> String {
        "capture".into()
    }

    fn complete(&self, messages: &[ChatMessage], _t: f64) -> Result<String, ProviderError> {
        let text = messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n\n");
        *self.last.lock().unwrap() = Some(text);
        Ok(self.reply.clone())
    }
}

fn compare(label: &str, got: &str, want: &str) -> Result<(), String> {
    if got == want {
        return Ok(());
    }
    let at = got
        .bytes()
        .zip(want.bytes())
        .position(|(a, b)| a != b)
        .unwrap_or(got.len().min(want.len()));
    Err(format!("{label}: differs from golden at byte {at}"))
}

fn emitted(reply: &str, call: impl FnOnce(&ModelClient)) -> String {
    let capture = std::sync::Arc::new(Capture::new(reply));
    let client = ModelClient::new(Box::new(capture.clone()), 0.3);
    call(&client);
    let last = capture.last.lock().unwrap().clone();
    last.unwrap_or_default()
}

pub fn golden_decompose() -> Result<(), String> {
    let got = emitted(r#"{"subtasks":[{"step":1,"description":"x"}]}"#, |c| {
        decompose(c, GOLDEN_QUERY).expect("decompose");
    });
    compare("decomposition prompt", &got, GOLDEN_DECOMPOSE)
}

pub fn golden_synthesis() -> Result<(), String> {
    let prior = vec![StepSlot {
        step: 1,
        sub_question: "Convert density from kg/m^3 to g/L".into(),
        code: Some(
            "def convert_density(rho):\n    \"\"\"kg/m^3 -> g/L\"\"\"\n    return rho * 1.0\n"
                .into(),
        ),
        result: Some(json!(1.23)),
    }];
    let subgoal = SubGoal {
        step: 2,
        description: "Compute the molar volume \"Vm\" at 20 kPa and 330 K".into(),
    };
    let got = emitted("<answer>ok</answer>", |c| {
        synthesize_tool(c, GOLDEN_QUERY, &subgoal, &prior).expect("synthesize");
    });
    compare("synthesis prompt", &got, GOLDEN_SYNTHESIS)
}

pub fn golden_toolcall() -> Result<(), String> {
    let got = toolcall_prompt("Convert 20 kPa to Pa", GOLDEN_CATALOG).render();
    compare("tool-call prompt", &got, GOLDEN_TOOLCALL)
}

/// The schema example the analyzer prompt asks for, with concrete text.
pub const SCHEMA_EXAMPLE: &str = r#"{
  "original_problem": "Calculate the molar mass of the gas.",
  "subtasks": [
    {"step": 1, "description": "Convert density from kg/m^3 to g/L"},
    {"step": 2, "description": "Convert pressure from kPa to Pa"},
    {"step": 3, "description": "Compute the molar volume"}
  ]
}"#;

pub fn plan(original: &str, steps: &[&str]) -> DecompositionPlan {
    DecompositionPlan {
        original_problem: original.into(),
        subtasks: steps
            .iter()
            .enumerate()
            .map(|(i, d)| SubGoal {
                step: i as u32 + 1,
                description: (*d).into(),
            })
            .collect(),
        warnings: Vec::new(),
    }
}

pub fn decomposition_roundtrip(p: &DecompositionPlan) -> Result<(), String> {
    let text = p.to_schema_json();
    match parse_decomposition_json(&text) {
        Ok(back) if &back == p => Ok(()),
        Ok(back) => Err(format!("round trip changed the plan: {back:?}")),
        Err(e) => Err(format!("round trip failed: {e}")),
    }
}

pub fn decomposition_schema_example() -> Result<(), String> {
    let got = parse_decomposition_json(SCHEMA_EXAMPLE).map_err(|e| e.to_string())?;
    let want = plan(
        "Calculate the molar mass of the gas.",
        &[
            "Convert density from kg/m^3 to g/L",
            "Convert pressure from kPa to Pa",
            "Compute the molar volume",
        ],
    );
    if got != want {
        return Err(format!("schema example parsed as {got:?}"));
    }
    let fenced = format!("Here is the plan:\n```json\n{SCHEMA_EXAMPLE}\n```\nDone.");
    match parse_decomposition_json(&fenced) {
        Ok(p) if p == want => Ok(()),
        other => Err(format!("fenced example: {other:?}")),
    }
}

pub const DECOMPOSITION_MALFORMED: [(&str, &str); 5] = [
    (
        "prose only",
        "First convert the density, then the pressure.",
    ),
    ("missing subtasks", r#"{"original_problem": "x"}"#),
    (
        "subtasks not a list",
        r#"{"original_problem": "x", "subtasks": "convert"}"#,
    ),
    (
        "subtask not an object",
        r#"{"original_problem": "x", "subtasks": ["convert density"]}"#,
    ),
    (
        "subtask without description",
        r#"{"original_problem": "x", "subtasks": [{"step": 1}]}"#,
    ),
];

pub fn decomposition_rejects() -> Result<(), String> {
    for (label, text) in DECOMPOSITION_MALFORMED {
        match parse_decomposition_json(text) {
            Err(SynthesisError::MalformedDecomposition(_)) => {}
            other => {
                return Err(format!(
                    "{label}: expected MalformedDecomposition, got {other:?}"
                ))
            }
        }
    }
    Ok(())
}

pub fn sample_tool(name: &str, result: Value) -> ProposedTool {
    ProposedTool {
        sub_question: "Convert pressure from kPa to Pa".into(),
        name: name.into(),
        source: format!(
            "def {name}(p_kpa):\n    \"\"\"kPa -> Pa\"\"\"\n    return p_kpa * 1000.0\n"
        ),
        text_description: "Converts kilopascals to pascals.".into(),
        io_description: IoDescription {
            input: "p_kpa: pressure in kPa".into(),
            output: "pressure in Pa".into(),
        },
        test_example: ProposedTestExample {
            input: json!({"p_kpa": 20}).as_object().unwrap().clone(),
            result,
        },
        error: None,
    }
}

pub fn synthesis_text(tools: &[ProposedTool], answer: &str) -> String {
    format!(
        "<code>\n{}\n</code>\n\n<answer>\n{answer}\n</answer>",
        serde_json::to_string_pretty(tools).unwrap()
    )
}

pub fn synthesis_roundtrip(tools: &[ProposedTool], answer: &str) -> Result<(), String> {
    let out = parse_synthesis_output(&synthesis_text(tools, answer)).map_err(|e| e.to_string())?;
    if out.tools != tools {
        return Err(format!("tools changed: {:?}", out.tools));
    }
    if out.answer.as_deref() != Some(answer.trim()) {
        return Err(format!("answer changed: {:?}", out.answer));
    }
    Ok(())
}

pub fn synthesis_schema_example() -> Result<(), String> {
    synthesis_roundtrip(
        &[sample_tool("kpa_to_pa", json!("20000 Pa"))],
        "The pressure is 20000 Pa.",
    )?;
    synthesis_roundtrip(
        &[sample_tool("kpa_to_pa", Value::Null)],
        "Pressure is 2.00000e4 Pa.",
    )?;
    let answer_only = parse_synthesis_output("<code>[]</code>\n<answer> 42 </answer>")
        .map_err(|e| e.to_string())?;
    if !answer_only.tools.is_empty() || answer_only.answer.as_deref() != Some("42") {
        return Err(format!("empty list with answer parsed as {answer_only:?}"));
    }
    Ok(())
}

pub fn synthesis_malformed() -> Vec<(&'static str, String)> {
    let good = serde_json::to_value(sample_tool("kpa_to_pa", json!(20000))).unwrap();
    let without = |key: &str| {
        let mut v = good.clone();
        v.as_object_mut().unwrap().remove(key);
        format!("<code>{}</code>", json!([v]))
    };
    let with = |key: &str, value: Value| {
        let mut v = good.clone();
        v[key] = value;
        format!("<code>{}</code>", json!([v]))
    };
    vec![
        ("code block not JSON", "<code>not-json</code>".to_string()),
        ("code block not a list", format!("<code>{good}</code>")),
        ("missing code field", without("code")),
        ("name not snake_case", with("name", json!("KpaToPa"))),
        (
            "unterminated code block",
            format!("<code>[{good}]\n<answer>1</answer>"),
        ),
        ("empty code", with("code", json!("  "))),
    ]
}

pub fn synthesis_rejects() -> Result<(), String> {
    for (label, text) in synthesis_malformed() {
        match parse_synthesis_output(&text) {
            Err(SynthesisError::MalformedToolJson(_)) => {}
            other => {
                return Err(format!(
                    "{label}: expected MalformedToolJson, got {other:?}"
                ))
            }
        }
    }
    Ok(())
}
