//! Shared fixtures: a rule-based stand-in model, a simulated runner that
//! evaluates the fixture tools natively, and a synthetic problem stream.

#![allow(dead_code)]

pub mod wire;

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde_json::{json, Map, Value};
use tte_core::engine::Problem;
use tte_core::metrics::Gold;
use tte_core::synthesis::{
    decomposition_prompt, fallback_prompt, synthesis_prompt, toolcall_prompt, ChatMessage,
    ModelProvider, ProviderError,
};
use tte_core::verification::{
    CannedRule, CannedSandbox, Sandbox, SandboxError, SandboxMode, SandboxRequest, SandboxResponse,
};

pub const GAS_R: f64 = 8.314462618;

/// A fixture tool: Python source plus a native twin used by the simulated
/// runner.
pub struct ToolSpec {
    pub sub_question: &'static str,
    pub name: &'static str,
    pub code: &'static str,
    pub description: &'static str,
    pub io: (&'static str, &'static str),
    pub test_input: Value,
}

type NativeFn = fn(&Map<String, Value>) -> Result<Value, String>;

fn arg(args: &Map<String, Value>, name: &str) -> Result<f64, String> {
    args.get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("exception: TypeError: missing required argument '{name}'"))
}

pub fn native(name: &str) -> Option<NativeFn> {
    let f: NativeFn = match name {
        "kg_m3_to_g_l" => |a| Ok(json!({"density_g_per_l": arg(a, "density_kg_m3")?})),
        "kpa_to_pa" => |a| Ok(json!({"pressure_pa": arg(a, "pressure_kpa")? * 1000.0})),
        "ideal_gas_molar_volume" => |a| {
            let v = GAS_R * arg(a, "temperature_k")? / arg(a, "pressure_pa")? * 1000.0;
            Ok(json!({ "molar_volume_l": v }))
        },
        "molar_mass_from_density" => |a| {
            Ok(json!({"molar_mass_g_mol": arg(a, "density_g_per_l")? * arg(a, "molar_volume_l")?}))
        },
        "moles_from_mass" => {
            |a| Ok(json!({"moles": arg(a, "mass_g")? / arg(a, "molar_mass_g_mol")?}))
        }
        "kinetic_energy" => |a| {
            let (m, v) = (arg(a, "mass_kg")?, arg(a, "speed_m_s")?);
            Ok(json!({ "energy_j": 0.5 * m * v * v }))
        },
        "joules_to_kilojoules" => |a| Ok(json!({"energy_kj": arg(a, "energy_j")? / 1000.0})),
        "mean3" => |a| Ok(json!((arg(a, "x1")? + arg(a, "x2")? + arg(a, "x3")?) / 3.0)),
        "stdev3" => |a| {
            let xs = [arg(a, "x1")?, arg(a, "x2")?, arg(a, "x3")?];
            let m = xs.iter().sum::<f64>() / 3.0;
            Ok(json!((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                / 2.0)
                .sqrt()))
        },
        "summarize_measurements" => |a| {
            let mean = native("mean3").unwrap()(a)?;
            let stdev = native("stdev3").unwrap()(a)?;
            Ok(json!({"mean": mean, "stdev": stdev}))
        },
        // Case-1 tools, scalar in and out.
        "convert_density" => |a| Ok(json!(arg(a, "density_kg_m3")?)),
        "convert_pressure" => |a| Ok(json!(arg(a, "pressure_kpa")? * 1000.0)),
        "calculate_molar_volume" => |a| {
            Ok(json!(
                GAS_R * arg(a, "temperature_k")? / arg(a, "pressure_pa")? * 1000.0
            ))
        },
        "calculate_molar_mass" => |a| {
            Ok(json!(
                arg(a, "density_g_per_l")? * arg(a, "molar_volume_l_per_mol")?
            ))
        },
        "unstable_ratio" => |_| Ok(json!("NaN")),
        _ => return None,
    };
    Some(f)
}

/// Stands in for the out-of-process runner: "check" looks for an obvious
/// syntax error and the function definition; "run" evaluates the native twin.
pub struct SimSandbox {
    pub calls: Mutex<usize>,
}

impl SimSandbox {
    pub fn new() -> Self {
        Self {
            calls: Mutex::new(0),
        }
    }
}

pub fn sim_response(req: &SandboxRequest) -> SandboxResponse {
    if req.source.contains("(:") {
        return SandboxResponse::failure("SyntaxError: invalid syntax");
    }
    if !req.source.contains(&format!("def {}(", req.function_name)) {
        return SandboxResponse::failure("function not found");
    }
    match req.mode {
        SandboxMode::Check => SandboxResponse::success(None),
        SandboxMode::Run => match native(&req.function_name) {
            Some(f) => match f(&req.args) {
                Ok(v) => SandboxResponse::success(Some(v)),
                Err(e) => SandboxResponse::failure(e),
            },
            None => {
                SandboxResponse::failure(format!("exception: NameError: {}", req.function_name))
            }
        },
    }
}

impl Sandbox for SimSandbox {
    fn execute(&self, req: &SandboxRequest) -> Result<SandboxResponse, SandboxError> {
        *self.calls.lock().unwrap() += 1;
        Ok(sim_response(req))
    }
}

/// Records every exchange as a canned rule so a run can be replayed through
/// [`CannedSandbox`].
pub struct RecordingSandbox<S> {
    pub inner: S,
    pub rules: Mutex<Vec<CannedRule>>,
}

impl<S: Sandbox> RecordingSandbox<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            rules: Mutex::new(Vec::new()),
        }
    }

    pub fn canned(&self) -> CannedSandbox {
        CannedSandbox::new(self.rules.lock().unwrap().clone())
    }
}

impl<S: Sandbox> Sandbox for RecordingSandbox<S> {
    fn execute(&self, req: &SandboxRequest) -> Result<SandboxResponse, SandboxError> {
        let resp = self.inner.execute(req)?;
        let rule = CannedRule {
            mode: req.mode,
            function_name: Some(req.function_name.clone()),
            args: (req.mode == SandboxMode::Run).then(|| req.args.clone()),
            source_contains: Some(req.source.clone()),
            response: resp.clone(),
        };
        let mut rules = self.rules.lock().unwrap();
        if !rules.contains(&rule) {
            rules.push(rule);
        }
        Ok(resp)
    }
}

/// Rule-based stand-in for a model. It knows a plan per question and a tool
/// per sub-question, and answers final prompts with the last computed value.
#[derive(Default)]
pub struct SimModel {
    pub plans: BTreeMap<String, Value>,
    pub tools: BTreeMap<String, Value>,
    pub fallback_answers: BTreeMap<String, String>,
    /// Parameter name -> known-value key, used when answering tool-call prompts.
    pub arg_aliases: BTreeMap<String, String>,
    /// Final answer text per question, overriding the computed value.
    pub final_answers: BTreeMap<String, String>,
}

fn system_of(p: tte_core::synthesis::Prompt) -> String {
    p.system
}

fn numeric_leaf(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::Object(m) => m.values().find_map(numeric_leaf),
        Value::Array(a) => a.iter().find_map(numeric_leaf),
        _ => None,
    }
}

impl SimModel {
    pub fn add_plan(&mut self, question: &str, subgoals: &[&str]) {
        let subtasks: Vec<Value> = subgoals
            .iter()
            .enumerate()
            .map(|(i, d)| json!({"step": i + 1, "description": d}))
            .collect();
        self.plans.insert(
            question.to_string(),
            json!({"original_problem": question, "subtasks": subtasks}),
        );
    }

    pub fn add_tool(&mut self, spec: &ToolSpec) {
        let result = native(spec.name)
            .map(|f| f(spec.test_input.as_object().unwrap()).unwrap_or(Value::Null))
            .unwrap_or(Value::Null);
        self.tools.insert(
            spec.sub_question.to_string(),
            json!({
                "sub_question": spec.sub_question,
                "name": spec.name,
                "code": spec.code,
                "text_description": spec.description,
                "io_description": {"input": spec.io.0, "output": spec.io.1},
                "test_example": {"input": spec.test_input, "result": result},
                "error": null,
            }),
        );
    }

    fn reply(&self, system: &str, user: &str) -> String {
        if system == system_of(decomposition_prompt("")) {
            let question = user.strip_prefix("[USER]\n").unwrap_or(user);
            return match self.plans.get(question) {
                Some(plan) => serde_json::to_string_pretty(plan).unwrap(),
                None => "I cannot decompose this problem.".into(),
            };
        }
        if system == system_of(synthesis_prompt("", &[])) {
            let slots: Vec<Value> = user
                .lines()
                .filter(|l| l.starts_with("{\"step\""))
                .map(|l| serde_json::from_str(l).unwrap())
                .collect();
            let executed: Vec<&Value> =
                slots.iter().filter(|s| s.get("result").is_some()).collect();
            if let Some(last) = executed.last() {
                let question = user
                    .split_once("Main question:\n")
                    .and_then(|(_, rest)| rest.split_once("\n\n"))
                    .map(|(q, _)| q)
                    .unwrap_or("");
                if let Some(text) = self.final_answers.get(question) {
                    return format!("<answer>{text}</answer>");
                }
                return match numeric_leaf(&last["result"]) {
                    Some(v) => format!("All steps executed.\n<answer>{v}</answer>"),
                    None => "<answer>undetermined</answer>".into(),
                };
            }
            let missing = slots
                .last()
                .and_then(|s| s["sub_question"].as_str())
                .unwrap_or("");
            return match self.tools.get(missing) {
                Some(tool) => format!(
                    "<code>{}</code>",
                    serde_json::to_string_pretty(&json!([tool])).unwrap()
                ),
                None => "<answer>no tool needed</answer>".into(),
            };
        }
        if system == system_of(toolcall_prompt("", "")) {
            let known: Map<String, Value> = user
                .lines()
                .find_map(|l| l.strip_prefix("Known values: "))
                .and_then(|j| serde_json::from_str(j).ok())
                .unwrap_or_default();
            let catalog: Value = user
                .lines()
                .find_map(|l| l.strip_prefix("Tool catalog: "))
                .and_then(|j| serde_json::from_str(j).ok())
                .unwrap_or(Value::Null);
            let function = &catalog[0]["function"];
            let mut args = Map::new();
            for p in function["parameters"]["required"]
                .as_array()
                .into_iter()
                .flatten()
            {
                let p = p.as_str().unwrap();
                let key = self.arg_aliases.get(p).map(String::as_str).unwrap_or(p);
                match known.get(key) {
                    Some(v) => {
                        args.insert(p.to_string(), v.clone());
                    }
                    None => return "[]".into(),
                }
            }
            return json!([{"type": "function", "function": {"name": function["name"], "arguments": Value::Object(args).to_string()}}]).to_string();
        }
        if system == system_of(fallback_prompt("")) {
            let question = user.strip_prefix("[USER]\n").unwrap_or(user);
            let answer = self
                .fallback_answers
                .get(question)
                .cloned()
                .unwrap_or_else(|| "unknown".into());
            return format!("Reasoning without tools.\n<answer>{answer}</answer>");
        }
        "unrecognized prompt".into()
    }
}

impl ModelProvider for SimModel {
    fn id(&self) -> String {
        "sim-model".into()
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        _temperature: f64,
    ) -> Result<String, ProviderError> {
        let get = |role: &str| {
            messages
                .iter()
                .find(|m| m.role == role)
                .map(|m| m.content.clone())
                .unwrap_or_default()
        };
        Ok(self.reply(&get("system"), &get("user")))
    }
}

pub const DENSITY_SUBGOAL: &str = "Convert density from kg/m^3 to g/L";
pub const PRESSURE_SUBGOAL: &str = "Convert pressure from kPa to Pa";
pub const VOLUME_SUBGOAL: &str =
    "Calculate molar volume of an ideal gas from pressure and temperature";
pub const MASS_SUBGOAL: &str = "Calculate molar mass from density and molar volume";

pub fn stream_tools() -> Vec<ToolSpec> {
    vec![
        ToolSpec {
            sub_question: DENSITY_SUBGOAL,
            name: "kg_m3_to_g_l",
            code: "def kg_m3_to_g_l(density_kg_m3):\n    \"\"\"Density in g/L from kg/m^3 (numerically equal).\"\"\"\n    return {\"density_g_per_l\": float(density_kg_m3)}\n",
            description: "Converts a density given in kg/m^3 to g/L.",
            io: ("density_kg_m3 (float, kg/m^3)", "density_g_per_l (float, g/L)"),
            test_input: json!({"density_kg_m3": 1.23}),
        },
        ToolSpec {
            sub_question: PRESSURE_SUBGOAL,
            name: "kpa_to_pa",
            code: "def kpa_to_pa(pressure_kpa):\n    \"\"\"Pressure in Pa from kPa.\"\"\"\n    return {\"pressure_pa\": pressure_kpa * 1000.0}\n",
            description: "Converts a pressure from kilopascals to pascals.",
            io: ("pressure_kpa (float, kPa)", "pressure_pa (float, Pa)"),
            test_input: json!({"pressure_kpa": 20}),
        },
        ToolSpec {
            sub_question: VOLUME_SUBGOAL,
            name: "ideal_gas_molar_volume",
            code: "R = 8.314462618  # J/(mol*K)\n\n\ndef ideal_gas_molar_volume(pressure_pa, temperature_k):\n    \"\"\"Molar volume Vm = RT/P in L/mol.\"\"\"\n    vm_m3 = (R * temperature_k) / pressure_pa\n    return {\"molar_volume_l\": vm_m3 * 1000.0}\n",
            description: "Computes the molar volume of an ideal gas in L/mol from pressure in Pa and temperature in K.",
            io: ("pressure_pa (float, Pa), temperature_k (float, K)", "molar_volume_l (float, L/mol)"),
            test_input: json!({"pressure_pa": 20000, "temperature_k": 330}),
        },
        ToolSpec {
            sub_question: MASS_SUBGOAL,
            name: "molar_mass_from_density",
            code: "def molar_mass_from_density(density_g_per_l, molar_volume_l):\n    \"\"\"M = rho * Vm in g/mol.\"\"\"\n    return {\"molar_mass_g_mol\": density_g_per_l * molar_volume_l}\n",
            description: "Multiplies gas density in g/L by molar volume in L/mol to give molar mass.",
            io: ("density_g_per_l (float), molar_volume_l (float)", "molar_mass_g_mol (float)"),
            test_input: json!({"density_g_per_l": 1.23, "molar_volume_l": 137.188633197}),
        },
        ToolSpec {
            sub_question: "Determine how many moles the sample contains",
            name: "moles_from_mass",
            code: "def moles_from_mass(mass_g, molar_mass_g_mol):\n    \"\"\"n = m / M.\"\"\"\n    return {\"moles\": mass_g / molar_mass_g_mol}\n",
            description: "Divides a sample mass in grams by molar mass to count moles.",
            io: ("mass_g (float), molar_mass_g_mol (float)", "moles (float)"),
            test_input: json!({"mass_g": 10, "molar_mass_g_mol": 2}),
        },
        ToolSpec {
            sub_question: "Compute kinetic energy from mass and speed",
            name: "kinetic_energy",
            code: "def kinetic_energy(mass_kg, speed_m_s):\n    \"\"\"E = m v^2 / 2 in joules.\"\"\"\n    return {\"energy_j\": 0.5 * mass_kg * speed_m_s ** 2}\n",
            description: "Kinetic energy in joules of a body with given mass and speed.",
            io: ("mass_kg (float), speed_m_s (float)", "energy_j (float, J)"),
            test_input: json!({"mass_kg": 2, "speed_m_s": 3}),
        },
        ToolSpec {
            sub_question: "Convert energy from joules to kilojoules",
            name: "joules_to_kilojoules",
            code: "def joules_to_kilojoules(energy_j):\n    \"\"\"kJ from J.\"\"\"\n    return {\"energy_kj\": energy_j / 1000.0}\n",
            description: "Expresses an energy in kilojoules.",
            io: ("energy_j (float, J)", "energy_kj (float, kJ)"),
            test_input: json!({"energy_j": 1500}),
        },
        ToolSpec {
            sub_question: "Compute the mean and sample standard deviation of three measurements",
            name: "summarize_measurements",
            code: "import math\n\n\ndef mean3(x1, x2, x3):\n    \"\"\"Arithmetic mean of three values.\"\"\"\n    return (x1 + x2 + x3) / 3.0\n\n\ndef stdev3(x1, x2, x3):\n    \"\"\"Sample standard deviation of three values.\"\"\"\n    m = mean3(x1, x2, x3)\n    return math.sqrt(((x1 - m) ** 2 + (x2 - m) ** 2 + (x3 - m) ** 2) / 2.0)\n\n\ndef summarize_measurements(x1, x2, x3):\n    \"\"\"Mean and spread of a triple of readings.\"\"\"\n    return {\"mean\": mean3(x1, x2, x3), \"stdev\": stdev3(x1, x2, x3)}\n",
            description: "Summarizes three repeated measurements.",
            io: ("x1, x2, x3 (float)", "mean, stdev (float)"),
            test_input: json!({"x1": 2, "x2": 4, "x3": 9}),
        },
        ToolSpec {
            sub_question: "Compute escape velocity from planet mass and radius",
            name: "escape_velocity",
            code: "def escape_velocity(:\n    return 0\n",
            description: "Escape velocity.",
            io: ("mass_kg, radius_m", "v (m/s)"),
            test_input: json!({"mass_kg": 5.97e24, "radius_m": 6.371e6}),
        },
        ToolSpec {
            sub_question: "Express the given pressure in pascals instead of kilopascals",
            name: "kpa_to_pa",
            code: "def kpa_to_pa(pressure_kpa):\n    \"\"\"Pressure in Pa from kPa.\"\"\"\n    return {\"pressure_pa\": pressure_kpa * 1000.0}\n",
            description: "Rescales kilopascals.",
            io: ("pressure_kpa (float, kPa)", "pressure_pa (float, Pa)"),
            test_input: json!({"pressure_kpa": 1}),
        },
        ToolSpec {
            sub_question: "Compute the arithmetic mean of three readings",
            name: "mean3",
            code: "def mean3(x1, x2, x3):\n    \"\"\"Arithmetic mean of three values.\"\"\"\n    return (x1 + x2 + x3) / 3.0\n",
            description: "Arithmetic mean of three values.",
            io: ("x1, x2, x3 (float)", "mean (float)"),
            test_input: json!({"x1": 1, "x2": 2, "x3": 6}),
        },
    ]
}

pub struct StreamFixture {
    pub problems: Vec<Problem>,
    pub model: SimModel,
}

fn problem(id: &str, question: &str, gold: Gold) -> Problem {
    Problem {
        id: id.into(),
        question: question.into(),
        gold,
        domain: Some("synthetic".into()),
    }
}

fn molar_mass(density: f64, t: f64, p_kpa: f64) -> f64 {
    density * GAS_R * t / (p_kpa * 1000.0) * 1000.0
}

/// Ten problems that exercise evolution, retrieval, duplicate credit, atomic
/// splitting, a broken synthesis, and an empty decomposition.
pub fn stream_fixture() -> StreamFixture {
    let mut model = SimModel::default();
    for spec in stream_tools() {
        model.add_tool(&spec);
    }
    let gas = [
        DENSITY_SUBGOAL,
        PRESSURE_SUBGOAL,
        VOLUME_SUBGOAL,
        MASS_SUBGOAL,
    ];
    let mut problems = Vec::new();
    let mut add = |id: &str, q: &str, plan: &[&str], gold: Gold| {
        model.add_plan(q, plan);
        problems.push(problem(id, q, gold));
    };

    add(
        "p01",
        "Estimate the molar mass of a gas with density_kg_m3 = 1.23, temperature_k = 330 and pressure_kpa = 20.",
        &gas,
        Gold::numeric(molar_mass(1.23, 330.0, 20.0)),
    );
    let mut p2 = gas.to_vec();
    p2.push("Determine how many moles the sample contains");
    add(
        "p02",
        "How many moles are in mass_g = 50 of a gas with density_kg_m3 = 2.0, temperature_k = 300 and pressure_kpa = 101.325?",
        &p2,
        Gold::numeric(50.0 / molar_mass(2.0, 300.0, 101.325)),
    );
    let ke = [
        "Compute kinetic energy from mass and speed",
        "Convert energy from joules to kilojoules",
    ];
    add(
        "p03",
        "A cart with mass_kg = 3 moves at speed_m_s = 4. What is its kinetic energy in kJ?",
        &ke,
        Gold::numeric(0.024),
    );
    add(
        "p04",
        "A ball with mass_kg = 0.5 moves at speed_m_s = 10. Find its kinetic energy in kilojoules.",
        &ke,
        Gold::numeric(0.025),
    );
    add(
        "p05",
        "Summarize the measurements x1 = 2, x2 = 4, x3 = 9.",
        &["Compute the mean and sample standard deviation of three measurements"],
        Gold::numeric(5.0),
    );
    add(
        "p06",
        "Find the escape velocity for mass_kg = 5.97e24 and radius_m = 6.371e6.",
        &["Compute escape velocity from planet mass and radius"],
        Gold::numeric(11_186.0),
    );
    add(
        "p07",
        "Express pressure_kpa = 250 in pascals.",
        &["Express the given pressure in pascals instead of kilopascals"],
        Gold::numeric(250_000.0),
    );
    add(
        "p08",
        "What is the meaning of the unit named after Kelvin?",
        &[],
        Gold::text("absolute temperature"),
    );
    add(
        "p09",
        "Estimate the molar volume for pressure_kpa = 50 and temperature_k = 273.15.",
        &[PRESSURE_SUBGOAL, VOLUME_SUBGOAL],
        Gold::numeric(GAS_R * 273.15 / 50_000.0 * 1000.0),
    );
    add(
        "p10",
        "Compute the mean of the readings x1 = 1, x2 = 2, x3 = 6.",
        &["Compute the arithmetic mean of three readings"],
        Gold::numeric(3.0),
    );
    model
        .fallback_answers
        .insert(problems[7].question.clone(), "absolute temperature".into());
    model
        .fallback_answers
        .insert(problems[5].question.clone(), "11186 m/s".into());
    StreamFixture { problems, model }
}

/// Builds a library tool from a fixture spec the way the engine would.
pub fn seed_tool(
    spec: &ToolSpec,
    embedder: &dyn tte_core::retrieval::Embedder,
    origin: tte_core::registry::Origin,
) -> tte_core::registry::AtomicTool {
    use tte_core::registry::{AtomicTool, IoDescription, ToolTestExample};
    let expected = native(spec.name)
        .and_then(|f| f(spec.test_input.as_object().unwrap()).ok())
        .unwrap_or(Value::Null);
    AtomicTool {
        id: format!("{}-seed", spec.name),
        name: spec.name.into(),
        description: spec.description.into(),
        io_description: IoDescription {
            input: spec.io.0.into(),
            output: spec.io.1.into(),
        },
        source: spec.code.into(),
        test_example: ToolTestExample {
            input: spec.test_input.as_object().unwrap().clone(),
            expected,
        },
        usage_count: 0,
        origin,
        created_seq: 0,
        desc_embedding: embedder
            .embed(&format!("{}\n{}", spec.sub_question, spec.description))
            .unwrap(),
        code_embedding: embedder.embed(spec.code).unwrap(),
    }
}

/// Re-verifies a library tool from scratch: full gates when it carries a
/// test example, the syntax gate otherwise.
pub fn reverify(tool: &tte_core::registry::AtomicTool, sandbox: &dyn Sandbox) -> bool {
    use tte_core::synthesis::{ProposedTestExample, ProposedTool};
    use tte_core::verification::{verify, VerifyLimits};
    let has_example = !tool.test_example.input.is_empty() || !tool.test_example.expected.is_null();
    if !has_example {
        let req = SandboxRequest::check(&tool.source, &tool.name, 1000);
        return sandbox.execute(&req).unwrap().ok;
    }
    let proposed = ProposedTool {
        sub_question: String::new(),
        name: tool.name.clone(),
        source: tool.source.clone(),
        text_description: tool.description.clone(),
        io_description: tool.io_description.clone(),
        test_example: ProposedTestExample {
            input: tool.test_example.input.clone(),
            result: tool.test_example.expected.clone(),
        },
        error: None,
    };
    verify(&proposed, sandbox, &VerifyLimits::default(), None)
        .unwrap()
        .overall
}

pub const CASE1_QUESTION: &str = "Estimate the molar mass of a gaseous compound with density_kg_m3 = 1.23, temperature_k = 330 and pressure_kpa = 20.";
pub const CASE1_STEPS: [&str; 4] = [
    "Convert density from kg/m^3 to g/L",
    "Convert pressure from kPa to Pa",
    "Calculate molar volume V_m (PV=nRT)",
    "Calculate molar mass M = rho x V_m",
];

/// The library that already holds the three generic tools, and the tool the
/// engine must evolve for the missing molar-volume step.
pub fn case1_tools() -> (Vec<ToolSpec>, ToolSpec) {
    let seeded = vec![
        ToolSpec {
            sub_question: CASE1_STEPS[0],
            name: "convert_density",
            code: "def convert_density(density_kg_m3):\n    \"\"\"kg/m^3 to g/L (same magnitude).\"\"\"\n    return density_kg_m3 * 1.0\n",
            description: "Unit conversion for density between kg/m^3 and g/L.",
            io: ("density_kg_m3 (float)", "density in g/L (float)"),
            test_input: json!({"density_kg_m3": 1.23}),
        },
        ToolSpec {
            sub_question: CASE1_STEPS[1],
            name: "convert_pressure",
            code: "def convert_pressure(pressure_kpa):\n    \"\"\"kPa to Pa.\"\"\"\n    return pressure_kpa * 1000.0\n",
            description: "Unit conversion for pressure between kPa and Pa.",
            io: ("pressure_kpa (float)", "pressure in Pa (float)"),
            test_input: json!({"pressure_kpa": 20}),
        },
        ToolSpec {
            sub_question: CASE1_STEPS[3],
            name: "calculate_molar_mass",
            code: "def calculate_molar_mass(density_g_per_l, molar_volume_l_per_mol):\n    \"\"\"M = rho * Vm.\"\"\"\n    return density_g_per_l * molar_volume_l_per_mol\n",
            description: "Multiplies a gas density by its per-mole volume to give grams per mole.",
            io: ("density_g_per_l, molar_volume_l_per_mol (float)", "g/mol (float)"),
            test_input: json!({"density_g_per_l": 1.0, "molar_volume_l_per_mol": 22.4}),
        },
    ];
    let evolved = ToolSpec {
        sub_question: CASE1_STEPS[2],
        name: "calculate_molar_volume",
        code: "def calculate_molar_volume(pressure_pa, temperature_k):\n    \"\"\"\n    Compute molar volume Vm under the ideal gas law: Vm = RT/P.\n\n    Args:\n        pressure_pa (float): pressure in Pa\n        temperature_k (float): temperature in K\n\n    Returns:\n        float: molar volume in L/mol\n    \"\"\"\n    R = 8.314462618  # J/(mol*K)\n    vm_m3_per_mol = (R * temperature_k) / pressure_pa\n    vm_L_per_mol = vm_m3_per_mol * 1000.0\n    return vm_L_per_mol\n",
        description: "Computes molar volume Vm = RT/P in L/mol for an ideal gas.",
        io: ("pressure_pa (float, Pa), temperature_k (float, K)", "molar volume (float, L/mol)"),
        test_input: json!({"pressure_pa": 20000, "temperature_k": 330}),
    };
    (seeded, evolved)
}
