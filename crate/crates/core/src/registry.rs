//! The evolving tool library.
//!
//! A [`ToolLibrary`] owns every registered [`AtomicTool`], tracks usage
//! counts (which double as reuse hit-counts), enforces the capacity bound by
//! pruning, and round-trips through a flat JSON snapshot.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::retrieval::EmbeddingVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("tool id `{0}` is already registered")]
    DuplicateId(String),
    #[error("invalid tool: {0}")]
    InvalidTool(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("snapshot was written by provider `{found}` (dim {found_dim}), expected `{expected}` (dim {expected_dim})")]
    ProviderMismatch {
        expected: String,
        expected_dim: usize,
        found: String,
        found_dim: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Predefined,
    Evolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IoDescription {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToolTestExample {
    pub input: Map<String, Value>,
    pub expected: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicTool {
    pub id: String,
    pub name: String,
    pub description: String,
    pub io_description: IoDescription,
    pub source: String,
    pub test_example: ToolTestExample,
    pub usage_count: u64,
    pub origin: Origin,
    pub created_seq: u64,
    pub desc_embedding: EmbeddingVector,
    pub code_embedding: EmbeddingVector,
}

/// True for non-empty lowercase identifiers made of `[a-z0-9_]` that do not
/// start with a digit.
pub fn is_snake_case(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolLibrary {
    tools: IndexMap<String, AtomicTool>,
    capacity: usize,
    min_usage: u64,
    provider: String,
    dim: usize,
    next_seq: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Snapshot {
    provider: String,
    dim: usize,
    capacity: usize,
    min_usage: u64,
    tools: Vec<AtomicTool>,
}

impl ToolLibrary {
    /// Creates an empty library whose tools carry embeddings from `provider`.
    pub fn new(capacity: usize, min_usage: u64, provider: impl Into<String>, dim: usize) -> Self {
        assert!(capacity >= 1, "library capacity must be positive");
        Self {
            tools: IndexMap::new(),
            capacity,
            min_usage,
            provider: provider.into(),
            dim,
            next_seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn min_usage(&self) -> u64 {
        self.min_usage
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Replaces the capacity bound and usage floor. Takes effect at the next
    /// [`prune`](Self::prune).
    pub fn set_limits(&mut self, capacity: usize, min_usage: u64) {
        assert!(capacity >= 1, "library capacity must be positive");
        self.capacity = capacity;
        self.min_usage = min_usage;
    }

    /// The `created_seq` the next registered tool will receive.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn get(&self, id: &str) -> Option<&AtomicTool> {
        self.tools.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.tools.contains_key(id)
    }

    /// Tools in `created_seq` order.
    pub fn tools(&self) -> impl ExactSizeIterator<Item = &AtomicTool> {
        self.tools.values()
    }

    /// Inserts `tool`, assigning it the next `created_seq`. Returns the
    /// assigned sequence number.
    pub fn register(&mut self, mut tool: AtomicTool) -> Result<u64, RegistryError> {
        if self.tools.contains_key(&tool.id) {
            return Err(RegistryError::DuplicateId(tool.id));
        }
        self.validate(&tool)?;
        tool.created_seq = self.next_seq;
        self.next_seq += 1;
        let seq = tool.created_seq;
        self.tools.insert(tool.id.clone(), tool);
        Ok(seq)
    }

    fn validate(&self, tool: &AtomicTool) -> Result<(), RegistryError> {
        if tool.id.is_empty() {
            return Err(RegistryError::InvalidTool("empty id".into()));
        }
        if !is_snake_case(&tool.name) {
            return Err(RegistryError::InvalidTool(format!(
                "name `{}` is not snake_case",
                tool.name
            )));
        }
        if tool.source.trim().is_empty() {
            return Err(RegistryError::InvalidTool(format!(
                "tool `{}` has empty source",
                tool.name
            )));
        }
        for (label, emb) in [
            ("desc", &tool.desc_embedding),
            ("code", &tool.code_embedding),
        ] {
            if emb.dim() != self.dim {
                return Err(RegistryError::InvalidTool(format!(
                    "{label}_embedding has dimension {}, library expects {}",
                    emb.dim(),
                    self.dim
                )));
            }
            if !emb.is_unit() {
                return Err(RegistryError::InvalidTool(format!(
                    "{label}_embedding is not unit norm"
                )));
            }
        }
        Ok(())
    }

    /// Credits one use to `id`; returns the new usage count.
    pub fn record_hit(&mut self, id: &str) -> Result<u64, RegistryError> {
        let tool = self
            .tools
            .get_mut(id)
            .ok_or_else(|| RegistryError::UnknownTool(id.to_string()))?;
        tool.usage_count += 1;
        Ok(tool.usage_count)
    }

    /// Enforces the capacity bound. Returns removed ids in removal order.
    ///
    /// When over capacity, every tool below `min_usage` is dropped first. If
    /// the library is still over capacity, the least-used tools are evicted
    /// (oldest first among equal usage) until the size equals the capacity.
    pub fn prune(&mut self) -> Vec<String> {
        if self.tools.len() <= self.capacity {
            return Vec::new();
        }
        let min_usage = self.min_usage;
        let mut removed: Vec<String> = self
            .tools
            .values()
            .filter(|t| t.usage_count < min_usage)
            .map(|t| t.id.clone())
            .collect();
        for id in &removed {
            self.tools.shift_remove(id);
        }

        if self.tools.len() > self.capacity {
            let mut order: Vec<(u64, u64, String)> = self
                .tools
                .values()
                .map(|t| (t.usage_count, t.created_seq, t.id.clone()))
                .collect();
            order.sort();
            let excess = self.tools.len() - self.capacity;
            for (_, _, id) in order.into_iter().take(excess) {
                self.tools.shift_remove(&id);
                removed.push(id);
            }
        }
        tracing::debug!(
            removed = removed.len(),
            size = self.tools.len(),
            "pruned library"
        );
        removed
    }

    /// Serializes the library as a canonical JSON document.
    pub fn save_snapshot(&self) -> Vec<u8> {
        let mut tools: Vec<AtomicTool> = self.tools.values().cloned().collect();
        tools.sort_by_key(|t| t.created_seq);
        let snapshot = Snapshot {
            provider: self.provider.clone(),
            dim: self.dim,
            capacity: self.capacity,
            min_usage: self.min_usage,
            tools,
        };
        let mut bytes = serde_json::to_vec_pretty(&snapshot).expect("library snapshot serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Parses a snapshot. When `expected` is given as `(provider, dim)`, a
    /// snapshot written by a different embedding provider is rejected.
    pub fn load_snapshot(
        bytes: &[u8],
        expected: Option<(&str, usize)>,
    ) -> Result<Self, RegistryError> {
        let snapshot: Snapshot = serde_json::from_slice(bytes)
            .map_err(|e| RegistryError::CorruptSnapshot(e.to_string()))?;
        if let Some((provider, dim)) = expected {
            if provider != snapshot.provider || dim != snapshot.dim {
                return Err(RegistryError::ProviderMismatch {
                    expected: provider.to_string(),
                    expected_dim: dim,
                    found: snapshot.provider,
                    found_dim: snapshot.dim,
                });
            }
        }
        if snapshot.capacity == 0 {
            return Err(RegistryError::CorruptSnapshot(
                "capacity must be positive".into(),
            ));
        }
        let mut library = Self::new(
            snapshot.capacity,
            snapshot.min_usage,
            snapshot.provider,
            snapshot.dim,
        );
        let mut last_seq = None;
        for tool in snapshot.tools {
            if last_seq.is_some_and(|s| tool.created_seq <= s) {
                return Err(RegistryError::CorruptSnapshot(
                    "tools are not in strictly increasing created_seq order".into(),
                ));
            }
            last_seq = Some(tool.created_seq);
            if library.tools.contains_key(&tool.id) {
                return Err(RegistryError::CorruptSnapshot(format!(
                    "duplicate id `{}`",
                    tool.id
                )));
            }
            library
                .validate(&tool)
                .map_err(|e| RegistryError::CorruptSnapshot(e.to_string()))?;
            library.tools.insert(tool.id.clone(), tool);
        }
        library.next_seq = last_seq.map_or(0, |s| s + 1);
        Ok(library)
    }
}
