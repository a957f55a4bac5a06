//! Construction of the pluggable pieces from command-line specs:
//! `scripted:<path>` / `http:<url>` providers, `hash:<dim>` / `http:<url>`
//! embedders, `process:<command>` / `stub:<path>` sandboxes, and the engine
//! configuration.

use std::path::Path;

use clap::Args;
use tte_core::engine::EngineConfig;
use tte_core::retrieval::{Embedder, HashEmbedder, HttpEmbedder};
use tte_core::synthesis::{HttpModelProvider, ModelProvider, ScriptedProvider};
use tte_core::verification::{CannedSandbox, ProcessSandbox, Sandbox};

use crate::error::{usage, CliError};

#[derive(Args, Debug, Clone)]
pub struct EmbedderArgs {
    /// `hash:<dim>` or `http:<url>`.
    #[arg(long, default_value = "hash:256")]
    pub embedder: String,
    /// Model name sent to an HTTP embedding service.
    #[arg(long, default_value = "default")]
    pub embed_model: String,
    /// Vector dimension returned by an HTTP embedding service.
    #[arg(long, default_value_t = 384)]
    pub embed_dim: usize,
}

/// The URL of an `http:<url>` locator. A bare `http://...` URL is accepted too.
fn http_url(locator: &str) -> &str {
    let rest = &locator["http:".len()..];
    if rest.starts_with("//") {
        locator
    } else {
        rest
    }
}

fn split_locator<'a>(kind: &str, locator: &'a str) -> Result<(&'a str, &'a str), CliError> {
    locator
        .split_once(':')
        .filter(|(_, rest)| !rest.is_empty())
        .ok_or_else(|| {
            usage(format!(
                "{kind} locator `{locator}` must look like <scheme>:<value>"
            ))
        })
}

pub fn build_embedder(args: &EmbedderArgs) -> Result<Box<dyn Embedder>, CliError> {
    match split_locator("embedder", &args.embedder)? {
        ("hash", dim) => {
            let dim: usize = dim.parse().ok().filter(|&d| d > 0).ok_or_else(|| {
                usage(format!(
                    "embedder dimension `{dim}` is not a positive integer"
                ))
            })?;
            Ok(Box::new(HashEmbedder::new(dim)))
        }
        ("http", _) => {
            if args.embed_dim == 0 {
                return Err(usage("--embed-dim must be positive"));
            }
            Ok(Box::new(HttpEmbedder::new(
                http_url(&args.embedder),
                args.embed_model.clone(),
                args.embed_dim,
            )))
        }
        (scheme, _) => Err(usage(format!(
            "unknown embedder scheme `{scheme}` (expected hash or http)"
        ))),
    }
}

pub fn build_provider(locator: &str) -> Result<Box<dyn ModelProvider>, CliError> {
    match split_locator("provider", locator)? {
        ("scripted", path) => ScriptedProvider::from_path(Path::new(path))
            .map(|p| Box::new(p) as Box<dyn ModelProvider>)
            .map_err(|e| CliError::Provider(e.to_string())),
        ("http", _) => Ok(Box::new(HttpModelProvider::new(http_url(locator)))),
        (scheme, _) => Err(usage(format!(
            "unknown provider scheme `{scheme}` (expected scripted or http)"
        ))),
    }
}

pub fn build_sandbox(locator: &str, config: &EngineConfig) -> Result<Box<dyn Sandbox>, CliError> {
    let unavailable = |e: tte_core::verification::SandboxError| CliError::Sandbox(e.to_string());
    match split_locator("sandbox", locator)? {
        ("process", command) => {
            let mut sandbox = ProcessSandbox::new(command).map_err(unavailable)?;
            if let Some(mb) = config.memory_cap_mb {
                sandbox = sandbox.with_memory_cap_mb(mb);
            }
            sandbox.start().map_err(unavailable)?;
            Ok(Box::new(sandbox))
        }
        ("stub", path) => CannedSandbox::from_path(Path::new(path))
            .map(|s| Box::new(s) as Box<dyn Sandbox>)
            .map_err(unavailable),
        (scheme, _) => Err(usage(format!(
            "unknown sandbox scheme `{scheme}` (expected process or stub)"
        ))),
    }
}

/// Reads `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Defaults, overlaid by the TOML file, overlaid by `key=value` pairs.
pub fn load_config(path: Option<&Path>, sets: &[String]) -> Result<EngineConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| usage(format!("config {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| usage(format!("config {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for set in sets {
        let (key, value) = set
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects key=value, got `{set}`")))?;
        table.insert(key.trim().to_string(), parse_value(value.trim()));
    }
    let config: EngineConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| usage(format!("config: {e}")))?;
    config.validate().map_err(usage)?;
    Ok(config)
}
