use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use serde::Serialize;
use tte_core::engine::{evaluate, load_corpus, Engine, EngineConfig};
use tte_core::metrics::{JudgeStrategy, MetricsReport, DEFAULT_ATOL, DEFAULT_RTOL};
use tte_core::registry::ToolLibrary;
use tte_core::synthesis::{ModelClient, ModelProvider, RecordingProvider};

use crate::backends::{build_embedder, build_provider, build_sandbox, load_config, EmbedderArgs};
use crate::error::{usage, CliError};
use crate::output::{trace_file_name, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeKind {
    /// Numeric tolerance or normalized match, no model calls.
    Local,
    /// Ask the configured model whether the answers agree.
    Model,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// TOML file with engine settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one engine setting, e.g. `--set tau_ret=0.6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// `scripted:<path>` or `http:<url>`.
    #[arg(long)]
    provider: String,
    #[command(flatten)]
    embedder: EmbedderArgs,
    /// `process:<command>` or `stub:<path>`.
    #[arg(long)]
    sandbox: String,
    /// JSON-lines problem file.
    #[arg(long)]
    corpus: PathBuf,
    /// Start from this library snapshot instead of an empty library.
    #[arg(long)]
    library: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "tte-out")]
    out: PathBuf,
    /// Recorded in the manifest. The engine itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = JudgeKind::Local)]
    judge: JudgeKind,
    /// Save every model reply as a replay script for `--provider scripted:`.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    config: &'a EngineConfig,
    provider: &'a str,
    embedder: String,
    sandbox: &'a str,
    corpus: &'a Path,
    library: Option<&'a Path>,
    out: &'a Path,
    seed: u64,
    judge: JudgeKind,
    problems: usize,
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
    bytes.push(b'\n');
    bytes
}

fn load_library(
    path: &Path,
    identity: &str,
    dim: usize,
    config: &EngineConfig,
) -> Result<ToolLibrary, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| usage(format!("library {}: {e}", path.display())))?;
    let mut library = ToolLibrary::load_snapshot(&bytes, Some((identity, dim)))
        .map_err(|e| usage(format!("library {}: {e}", path.display())))?;
    library.set_limits(config.capacity, config.min_usage);
    Ok(library)
}

pub fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref(), &args.sets)?;
    let problems = load_corpus(&args.corpus).map_err(usage)?;
    let embedder = build_embedder(&args.embedder)?;
    let initial = args
        .library
        .as_deref()
        .map(|p| load_library(p, &embedder.identity(), embedder.dim(), &config))
        .transpose()?;

    let provider: Arc<dyn ModelProvider> = Arc::from(build_provider(&args.provider)?);
    let recorder = Arc::new(RecordingProvider::new(provider));
    let client = ModelClient::new(Box::new(recorder.clone()), config.temperature);
    let sandbox = build_sandbox(&args.sandbox, &config)?;
    let engine =
        Engine::new(config.clone(), &client, embedder.as_ref(), sandbox.as_ref()).map_err(usage)?;

    let traces_dir = args.out.join("traces");
    std::fs::create_dir_all(&traces_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", traces_dir.display())))?;

    let library = initial.unwrap_or_else(|| engine.empty_library());
    let outcome = engine.run_stream(&problems, library);
    let strategy = match args.judge {
        JudgeKind::Local => JudgeStrategy::Local {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
        },
        JudgeKind::Model => JudgeStrategy::Provider(&client),
    };
    let records = evaluate(&problems, &outcome.results, &strategy);
    let report = MetricsReport::build(
        &records,
        &outcome.library_sizes,
        &outcome.library,
        config.lambda,
    )
    .map_err(|e| CliError::Io(format!("metrics: {e}")))?;
    let csv = MetricsReport::records_csv(&records, &outcome.library_sizes)
        .map_err(|e| CliError::Io(format!("metrics: {e}")))?;

    for r in &outcome.results {
        write_atomic(
            &traces_dir.join(trace_file_name(&r.problem_id)),
            r.trace.to_json().as_bytes(),
        )?;
    }
    write_atomic(
        &args.out.join("library.json"),
        &outcome.library.save_snapshot(),
    )?;
    write_atomic(&args.out.join("report.json"), &to_json(&report))?;
    write_atomic(&args.out.join("records.csv"), csv.as_bytes())?;
    let manifest = RunManifest {
        config: &config,
        provider: &args.provider,
        embedder: embedder.identity(),
        sandbox: &args.sandbox,
        corpus: &args.corpus,
        library: args.library.as_deref(),
        out: &args.out,
        seed: args.seed,
        judge: args.judge,
        problems: problems.len(),
    };
    write_atomic(&args.out.join("manifest.json"), &to_json(&manifest))?;
    if let Some(path) = &args.record {
        write_atomic(path, &recorder.script().to_json())?;
    }

    let failed = outcome.results.iter().filter(|r| r.error.is_some()).count();
    let accuracy = report
        .accuracy
        .map_or_else(|| "undefined".to_string(), |a| format!("{a:.4}"));
    println!(
        "solved {} problems ({failed} aborted), accuracy {accuracy}, library {} tools, outputs in {}",
        problems.len(),
        outcome.library.len(),
        args.out.display()
    );
    Ok(())
}
