//! Keeps the command-line fixtures (corpus, model script, canned runner
//! responses, seed library) in step with the engine. Set
//! `TTE_WRITE_FIXTURES=1` to regenerate them.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use common::*;
use tte_core::engine::{Engine, EngineConfig, Problem};
use tte_core::registry::{Origin, ToolLibrary};
use tte_core::retrieval::{Embedder, HashEmbedder};
use tte_core::synthesis::{ModelClient, RecordingProvider, DEFAULT_TEMPERATURE};
use tte_core::verification::CannedSandbox;

const DIM: usize = 256;
const PICKED: [&str; 3] = ["p01", "p03", "p09"];
const SEEDED: [&str; 2] = ["kpa_to_pa", "kinetic_energy"];

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures")
}

fn seed_library(emb: &HashEmbedder) -> ToolLibrary {
    let config = EngineConfig::default();
    let mut lib = ToolLibrary::new(config.capacity, config.min_usage, emb.identity(), emb.dim());
    for spec in stream_tools()
        .iter()
        .filter(|s| SEEDED.contains(&s.name))
        .take(SEEDED.len())
    {
        lib.register(seed_tool(spec, emb, Origin::Predefined))
            .unwrap();
    }
    lib
}

fn generate() -> BTreeMap<&'static str, Vec<u8>> {
    let fx = stream_fixture();
    let problems: Vec<Problem> = fx
        .problems
        .into_iter()
        .filter(|p| PICKED.contains(&p.id.as_str()))
        .collect();
    let emb = HashEmbedder::new(DIM);
    let recorder = Arc::new(RecordingProvider::new(fx.model));
    let sandbox = RecordingSandbox::new(SimSandbox::new());
    let client = ModelClient::new(Box::new(recorder.clone()), DEFAULT_TEMPERATURE);
    let engine = Engine::new(EngineConfig::default(), &client, &emb, &sandbox).unwrap();
    // Zero and Adapt sessions share one script and one rule file.
    engine.run_stream(&problems, engine.empty_library());
    engine.run_stream(&problems, seed_library(&emb));

    let corpus: String = problems
        .iter()
        .map(|p| serde_json::to_string(p).unwrap() + "\n")
        .collect();
    let canned = CannedSandbox::new(sandbox.canned().rules);
    let mut sandbox_json = serde_json::to_vec_pretty(&canned).unwrap();
    sandbox_json.push(b'\n');
    let mut script = recorder.script().to_json();
    script.push(b'\n');
    BTreeMap::from([
        ("corpus.jsonl", corpus.into_bytes()),
        ("script.json", script),
        ("sandbox.json", sandbox_json),
        ("seed_library.json", seed_library(&emb).save_snapshot()),
    ])
}

#[test]
fn cli_fixtures_are_current() {
    let files = generate();
    let dir = fixture_dir();
    if std::env::var_os("TTE_WRITE_FIXTURES").is_some() {
        std::fs::create_dir_all(&dir).unwrap();
        for (name, bytes) in &files {
            std::fs::write(dir.join(name), bytes).unwrap();
        }
    }
    for (name, bytes) in &files {
        let on_disk = std::fs::read(dir.join(name)).unwrap_or_default();
        assert!(
            &on_disk == bytes,
            "{name} is stale; rerun with TTE_WRITE_FIXTURES=1"
        );
    }
}
