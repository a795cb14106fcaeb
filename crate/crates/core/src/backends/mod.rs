//! Chat, summarization and embedding providers.
//!
//! Two implementations ship with the crate: an OpenAI-compatible HTTP client
//! ([`http`]) and a deterministic scripted double ([`scripted`]) used for
//! offline runs and tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{EmbeddingVector, Phase};

pub mod http;
pub mod scripted;

pub use http::{HttpChatBackend, HttpEmbedder, RetryPolicy};
pub use scripted::{ScriptedAgentPlan, ScriptedBackend, ScriptedEmbedder, SummaryRule, TurnKey};

pub const DEFAULT_SUMMARY_INSTRUCTION: &str =
    "Summarize the following message in a single sentence.";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport_error: {message} (after {attempts} attempt(s))")]
    Transport { message: String, attempts: u32 },
    #[error("provider_error: HTTP {status} (after {attempts} attempt(s)): {body_excerpt}")]
    Provider {
        status: u16,
        body_excerpt: String,
        attempts: u32,
    },
    #[error("empty_completion: provider returned no text")]
    EmptyCompletion,
    #[error("invalid_response: {0}")]
    InvalidResponse(String),
    #[error("inconsistent_dim: expected {expected}, got {found} at index {index}")]
    InconsistentDim {
        expected: usize,
        found: usize,
        index: usize,
    },
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("plan_missing_turn: agent {agent_id} has no output for {turn}")]
    MissingTurn { agent_id: String, turn: String },
    #[error("unknown_agent: {0}")]
    UnknownAgent(String),
    #[error("invalid_spec: {0}")]
    InvalidSpec(String),
    #[error("plan_parse_error: {0}")]
    PlanParse(String),
}

impl BackendError {
    pub fn code(&self) -> &'static str {
        match self {
            BackendError::Transport { .. } => "transport_error",
            BackendError::Provider { .. } => "provider_error",
            BackendError::EmptyCompletion => "empty_completion",
            BackendError::InvalidResponse(_) => "invalid_response",
            BackendError::InconsistentDim { .. } => "inconsistent_dim",
            BackendError::Precondition(_) => "precondition",
            BackendError::MissingTurn { .. } => "plan_missing_turn",
            BackendError::UnknownAgent(_) => "unknown_agent",
            BackendError::InvalidSpec(_) => "invalid_spec",
            BackendError::PlanParse(_) => "plan_parse_error",
        }
    }
}

fn default_temperature() -> f64 {
    0.7
}

fn default_max_tokens() -> u32 {
    256
}

/// One discussion participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    pub model_name: String,
    #[serde(default)]
    pub endpoint: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Name of the environment variable holding the bearer token. Empty means
    /// no `Authorization` header is sent.
    #[serde(default)]
    pub api_key_env: String,
}

impl AgentSpec {
    /// An agent with default decoding settings and no endpoint, suitable for
    /// scripted runs.
    pub fn scripted(agent_id: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            agent_id: agent_id.into(),
            model_name: model_name.into(),
            endpoint: String::new(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            api_key_env: String::new(),
        }
    }

    pub fn validate(&self, require_endpoint: bool) -> Result<(), BackendError> {
        if self.agent_id.trim().is_empty() {
            return Err(BackendError::InvalidSpec("agent_id is empty".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidSpec(format!(
                "{}: temperature must be a finite value >= 0",
                self.agent_id
            )));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidSpec(format!("{}: max_tokens must be positive", self.agent_id)));
        }
        if require_endpoint || !self.endpoint.is_empty() {
            validate_endpoint(&self.agent_id, &self.endpoint)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_endpoint(owner: &str, endpoint: &str) -> Result<(), BackendError> {
    match reqwest::Url::parse(endpoint) {
        Ok(url) if matches!(url.scheme(), "http" | "https") => Ok(()),
        Ok(url) => Err(BackendError::InvalidSpec(format!(
            "{owner}: unsupported endpoint scheme {:?}",
            url.scheme()
        ))),
        Err(e) => Err(BackendError::InvalidSpec(format!("{owner}: endpoint {endpoint:?}: {e}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }
}

/// Identifies which turn of which discussion a request belongs to.
///
/// HTTP providers ignore it; scripted providers use it to pick their output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnRequest {
    pub discussion_id: String,
    pub item_id: String,
    pub phase: Phase,
    pub round: u32,
}

pub(crate) fn check_messages(messages: &[ChatMessage]) -> Result<(), BackendError> {
    if messages.is_empty() {
        return Err(BackendError::Precondition("messages must be non-empty".into()));
    }
    if let Some(m) = messages
        .iter()
        .find(|m| m.role != Role::Assistant && m.content.is_empty())
    {
        return Err(BackendError::Precondition(format!("{:?} message has empty content", m.role)));
    }
    Ok(())
}

pub fn check_embed_input(texts: &[String]) -> Result<(), BackendError> {
    if texts.is_empty() {
        return Err(BackendError::Precondition("texts must be non-empty".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(BackendError::Precondition(format!("text at index {i} is empty")));
    }
    Ok(())
}

/// A chat-style language model agent.
///
/// Implementations must not retain message history; callers assemble the
/// full context for every request.
pub trait ChatBackend: Send + Sync {
    fn chat_complete(
        &self,
        spec: &AgentSpec,
        turn: &TurnRequest,
        messages: &[ChatMessage],
    ) -> Result<String, BackendError>;

    /// One-sentence summary of `turn_text`, produced by the same agent.
    fn summarize_turn(
        &self,
        spec: &AgentSpec,
        turn: &TurnRequest,
        turn_text: &str,
    ) -> Result<String, BackendError>;
}

/// Text embedding provider.
pub trait Embedder: Send + Sync {
    fn provider_id(&self) -> &str;

    /// One vector per text, order-aligned, all of equal dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError>;
}

impl<E: Embedder + ?Sized> Embedder for &E {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        (**self).embed(texts)
    }
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        (**self).embed(texts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub provider_id: String,
    pub model_name: String,
    pub endpoint: String,
    #[serde(default)]
    pub api_key_env: String,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

fn default_batch_size() -> usize {
    64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agent_spec_validation() {
        let mut spec = AgentSpec::scripted("a", "m");
        assert!(spec.validate(false).is_ok());
        assert_eq!(spec.validate(true).unwrap_err().code(), "invalid_spec");
        spec.endpoint = "https://api.example.com/v1".into();
        assert!(spec.validate(true).is_ok());
        spec.endpoint = "ftp://x".into();
        assert!(spec.validate(true).is_err());
        spec.endpoint = String::new();
        spec.temperature = -1.0;
        assert!(spec.validate(false).is_err());
    }

    #[test]
    fn message_checks() {
        assert_eq!(check_messages(&[]).unwrap_err().code(), "precondition");
        assert!(check_messages(&[ChatMessage::user("")]).is_err());
        assert!(check_messages(&[ChatMessage::user("x")]).is_ok());
        assert!(check_embed_input(&["a".into(), "".into()]).is_err());
    }
}
