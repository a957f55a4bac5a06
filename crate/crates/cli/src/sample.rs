use tte_core::engine::load_corpus;
use tte_core::metrics::stratified_seed_sample;

use crate::backends::build_embedder;
use crate::error::{usage, CliError};
use crate::output::{csv_writer, emit, finish_csv};
use crate::SampleArgs;

/// Writes `id,cluster` rows for the sampled problems.
pub fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    if args.clusters == 0 {
        return Err(usage("--clusters must be at least 1"));
    }
    let problems = load_corpus(&args.corpus).map_err(usage)?;
    let embedder = build_embedder(&args.embedder)?;
    let texts: Vec<&str> = problems.iter().map(|p| p.question.as_str()).collect();
    let vectors = if texts.is_empty() {
        Vec::new()
    } else {
        embedder
            .embed_batch(&texts)
            .map_err(|e| CliError::Provider(format!("embedding: {e}")))?
    };
    let items: Vec<_> = problems.iter().map(|p| p.id.clone()).zip(vectors).collect();
    let picked = if items.is_empty() {
        Vec::new()
    } else {
        stratified_seed_sample(&items, args.clusters, args.per_cluster, args.seed)
    };
    let mut w = csv_writer();
    w.write_record(["id", "cluster"])
        .expect("in-memory csv write");
    for s in picked {
        w.write_record([s.id, s.cluster.to_string()])
            .expect("in-memory csv write");
    }
    emit(args.out.as_deref(), &finish_csv(w))
}
