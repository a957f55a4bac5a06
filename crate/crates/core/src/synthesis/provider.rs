//! Model provider abstraction, the scripted replay provider, and the
//! transcript-keeping client the engine talks to.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default sampling temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("model provider unavailable: {0}")]
    Unavailable(String),
    #[error("scripted provider has no reply for prompt {0}")]
    TranscriptMiss(String),
    #[error("prompt is empty")]
    EmptyPrompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// A two-part prompt. The rendered text is `system + "\n\n" + user`, which is
/// also the concatenation the scripted provider hashes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            user: user.into(),
        }
    }

    pub fn render(&self) -> String {
        concatenate(&self.messages())
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        vec![
            ChatMessage {
                role: "system".into(),
                content: self.system.clone(),
            },
            ChatMessage {
                role: "user".into(),
                content: self.user.clone(),
            },
        ]
    }
}

/// Message contents joined by a blank line.
pub fn concatenate(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| m.content.as_str())
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Lowercase hex SHA-256 of the concatenated prompt.
pub fn prompt_key(messages: &[ChatMessage]) -> String {
    hex::encode(Sha256::digest(concatenate(messages).as_bytes()))
}

pub trait ModelProvider: Send + Sync {
    fn id(&self) -> String;

    fn complete(&self, messages: &[ChatMessage], temperature: f64)
        -> Result<String, ProviderError>;
}

/// Replays responses keyed by [`prompt_key`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptedProvider {
    replies: BTreeMap<String, String>,
}

impl ScriptedProvider {
    pub fn new(replies: BTreeMap<String, String>) -> Self {
        Self { replies }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ProviderError> {
        serde_json::from_slice(bytes)
            .map(Self::new)
            .map_err(|e| ProviderError::Unavailable(format!("invalid script: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self, ProviderError> {
        let bytes = std::fs::read(path).map_err(|e| {
            ProviderError::Unavailable(format!("cannot read script {}: {e}", path.display()))
        })?;
        Self::from_json(&bytes)
    }

    /// Adds a reply for `prompt`.
    pub fn script(&mut self, prompt: &Prompt, reply: impl Into<String>) {
        self.replies
            .insert(prompt_key(&prompt.messages()), reply.into());
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(&self.replies).expect("script serializes")
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

impl ModelProvider for ScriptedProvider {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        _temperature: f64,
    ) -> Result<String, ProviderError> {
        let key = prompt_key(messages);
        self.replies
            .get(&key)
            .cloned()
            .ok_or(ProviderError::TranscriptMiss(key))
    }
}

impl<P: ModelProvider + ?Sized> ModelProvider for std::sync::Arc<P> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
    ) -> Result<String, ProviderError> {
        (**self).complete(messages, temperature)
    }
}

/// Wraps a live provider and remembers every reply so the session can be
/// replayed later through a [`ScriptedProvider`].
pub struct RecordingProvider<P> {
    inner: P,
    recorded: Mutex<BTreeMap<String, String>>,
}

impl<P: ModelProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            recorded: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn script(&self) -> ScriptedProvider {
        ScriptedProvider::new(self.recorded.lock().expect("recording lock").clone())
    }
}

impl<P: ModelProvider> ModelProvider for RecordingProvider<P> {
    fn id(&self) -> String {
        format!("recording:{}", self.inner.id())
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
    ) -> Result<String, ProviderError> {
        let reply = self.inner.complete(messages, temperature)?;
        self.recorded
            .lock()
            .expect("recording lock")
            .insert(prompt_key(messages), reply.clone());
        Ok(reply)
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct CompletionResponse {
    content: String,
}

/// Client for a chat-completion service speaking
/// `{messages: [{role, content}], temperature} -> {content}`.
pub struct HttpModelProvider {
    url: String,
    client: reqwest::blocking::Client,
}

impl HttpModelProvider {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl ModelProvider for HttpModelProvider {
    fn id(&self) -> String {
        format!("http:{}", self.url)
    }

    fn complete(
        &self,
        messages: &[ChatMessage],
        temperature: f64,
    ) -> Result<String, ProviderError> {
        let response: CompletionResponse = self
            .client
            .post(&self.url)
            .json(&CompletionRequest {
                messages,
                temperature,
            })
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(response.content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_role: String,
    pub request_text: String,
    pub response_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTranscript {
    pub provider_id: String,
    pub temperature: f64,
    pub entries: Vec<TranscriptEntry>,
}

/// The engine-facing handle on a provider. Every successful exchange is
/// appended to the transcript.
pub struct ModelClient {
    provider: Box<dyn ModelProvider>,
    temperature: f64,
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl ModelClient {
    pub fn new(provider: Box<dyn ModelProvider>, temperature: f64) -> Self {
        Self {
            provider,
            temperature,
            entries: Mutex::new(Vec::new()),
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        self.complete_as("user", prompt)
    }

    /// Sends `prompt`, tagging the transcript entry with `role`.
    pub fn complete_as(&self, role: &str, prompt: &Prompt) -> Result<String, ProviderError> {
        if prompt.system.trim().is_empty() && prompt.user.trim().is_empty() {
            return Err(ProviderError::EmptyPrompt);
        }
        let messages = prompt.messages();
        let reply = self.provider.complete(&messages, self.temperature)?;
        self.entries
            .lock()
            .expect("transcript lock")
            .push(TranscriptEntry {
                request_role: role.to_string(),
                request_text: concatenate(&messages),
                response_text: reply.clone(),
            });
        Ok(reply)
    }

    pub fn transcript(&self) -> ModelTranscript {
        ModelTranscript {
            provider_id: self.provider.id(),
            temperature: self.temperature,
            entries: self.entries.lock().expect("transcript lock").clone(),
        }
    }
}
