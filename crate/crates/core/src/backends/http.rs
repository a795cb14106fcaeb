//! OpenAI-compatible HTTP providers.
//!
//! Chat: `POST {endpoint}/chat/completions`, reading
//! `choices[0].message.content`. Embeddings: `POST {endpoint}/embeddings`,
//! reading `data[i].embedding`. Completions are returned verbatim, reasoning
//! blocks included.

use std::time::Duration;

use rand::Rng;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    check_embed_input, check_messages, validate_endpoint, AgentSpec, BackendError, ChatBackend, ChatMessage,
    Embedder, EmbeddingSpec, TurnRequest, DEFAULT_SUMMARY_INSTRUCTION,
};
use crate::primitives::EmbeddingVector;

const BODY_EXCERPT_CHARS: usize = 256;

/// Retries transport failures, 429 and 5xx responses with exponential
/// backoff and up to 50% additive jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub base_delay: Duration,
    #[serde(with = "millis")]
    pub max_delay: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, where `attempt` is 1-based.
    pub fn delay_after(&self, attempt: u32) -> Duration {
        let exp = self
            .base_delay
            .saturating_mul(1u32 << (attempt.saturating_sub(1)).min(16));
        let capped = exp.min(self.max_delay);
        if self.jitter && !capped.is_zero() {
            let factor: f64 = rand::rng().random_range(0.0..0.5);
            capped + capped.mul_f64(factor)
        } else {
            capped
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

fn is_retryable(status: StatusCode) -> bool {
    status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error()
}

fn excerpt(body: &str) -> String {
    body.chars().take(BODY_EXCERPT_CHARS).collect()
}

fn join_url(endpoint: &str, path: &str) -> String {
    format!("{}/{}", endpoint.trim_end_matches('/'), path)
}

#[derive(Debug, Clone)]
struct JsonPoster {
    client: Client,
    retry: RetryPolicy,
}

impl JsonPoster {
    fn new(retry: RetryPolicy, timeout: Duration) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport {
                message: e.to_string(),
                attempts: 0,
            })?;
        Ok(Self { client, retry })
    }

    fn post(&self, url: &str, api_key_env: &str, body: &Value) -> Result<Value, BackendError> {
        let key = if api_key_env.is_empty() {
            None
        } else {
            std::env::var(api_key_env).ok()
        };
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let mut request = self.client.post(url).json(body);
            if let Some(key) = &key {
                request = request.bearer_auth(key);
            }
            let failure = match request.send() {
                Ok(response) => {
                    let status = response.status();
                    let text = response.text().map_err(|e| BackendError::Transport {
                        message: e.to_string(),
                        attempts: attempt,
                    })?;
                    if status.is_success() {
                        return serde_json::from_str(&text)
                            .map_err(|e| BackendError::InvalidResponse(format!("{e}: {}", excerpt(&text))));
                    }
                    let err = BackendError::Provider {
                        status: status.as_u16(),
                        body_excerpt: excerpt(&text),
                        attempts: attempt,
                    };
                    if !is_retryable(status) {
                        return Err(err);
                    }
                    err
                }
                Err(e) => BackendError::Transport {
                    message: e.to_string(),
                    attempts: attempt,
                },
            };
            if attempt >= max_attempts {
                return Err(failure);
            }
            std::thread::sleep(self.retry.delay_after(attempt));
        }
    }
}

/// Chat agent served by an OpenAI-compatible endpoint.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    poster: JsonPoster,
    summary_instruction: String,
}

impl HttpChatBackend {
    pub fn new(retry: RetryPolicy) -> Result<Self, BackendError> {
        Ok(Self {
            poster: JsonPoster::new(retry, Duration::from_secs(120))?,
            summary_instruction: DEFAULT_SUMMARY_INSTRUCTION.to_owned(),
        })
    }

    pub fn with_summary_instruction(mut self, instruction: impl Into<String>) -> Self {
        self.summary_instruction = instruction.into();
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Result<Self, BackendError> {
        self.poster = JsonPoster::new(self.poster.retry.clone(), timeout)?;
        Ok(self)
    }
}

impl ChatBackend for HttpChatBackend {
    fn chat_complete(
        &self,
        spec: &AgentSpec,
        _turn: &TurnRequest,
        messages: &[ChatMessage],
    ) -> Result<String, BackendError> {
        check_messages(messages)?;
        validate_endpoint(&spec.agent_id, &spec.endpoint)?;
        let body = json!({
            "model": spec.model_name,
            "messages": messages,
            "temperature": spec.temperature,
            "max_tokens": spec.max_tokens,
        });
        let response = self
            .poster
            .post(&join_url(&spec.endpoint, "chat/completions"), &spec.api_key_env, &body)?;
        let content = response
            .pointer("/choices/0/message/content")
            .ok_or_else(|| BackendError::InvalidResponse("missing choices[0].message.content".into()))?;
        match content {
            Value::Null => Err(BackendError::EmptyCompletion),
            Value::String(s) if s.trim().is_empty() => Err(BackendError::EmptyCompletion),
            Value::String(s) => Ok(s.clone()),
            other => Err(BackendError::InvalidResponse(format!("content is not a string: {other}"))),
        }
    }

    fn summarize_turn(
        &self,
        spec: &AgentSpec,
        turn: &TurnRequest,
        turn_text: &str,
    ) -> Result<String, BackendError> {
        if turn_text.is_empty() {
            return Err(BackendError::Precondition("turn_text must be non-empty".into()));
        }
        let messages = [ChatMessage::user(format!("{}\n\n{}", self.summary_instruction, turn_text))];
        self.chat_complete(spec, turn, &messages)
            .map(|s| s.trim().to_owned())
    }
}

/// Embeddings served by an OpenAI-compatible endpoint.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    spec: EmbeddingSpec,
    poster: JsonPoster,
}

impl HttpEmbedder {
    pub fn new(spec: EmbeddingSpec, retry: RetryPolicy) -> Result<Self, BackendError> {
        validate_endpoint(&spec.provider_id, &spec.endpoint)?;
        if spec.batch_size == 0 {
            return Err(BackendError::InvalidSpec("batch_size must be positive".into()));
        }
        Ok(Self {
            spec,
            poster: JsonPoster::new(retry, Duration::from_secs(120))?,
        })
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        let body = json!({ "model": self.spec.model_name, "input": texts });
        let response = self
            .poster
            .post(&join_url(&self.spec.endpoint, "embeddings"), &self.spec.api_key_env, &body)?;
        let data = response
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::InvalidResponse("missing data array".into()))?;
        if data.len() != texts.len() {
            return Err(BackendError::InvalidResponse(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                data.len()
            )));
        }
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
        for (position, entry) in data.iter().enumerate() {
            let index = entry
                .get("index")
                .and_then(Value::as_u64)
                .map(|i| i as usize)
                .unwrap_or(position);
            let values = entry
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| BackendError::InvalidResponse(format!("data[{position}].embedding missing")))?
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| BackendError::InvalidResponse(format!("data[{position}] has a non-number")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push((index, values));
        }
        rows.sort_by_key(|(i, _)| *i);
        if rows.iter().enumerate().any(|(i, (index, _))| i != *index) {
            return Err(BackendError::InvalidResponse("embedding indices are not a permutation".into()));
        }
        Ok(rows.into_iter().map(|(_, v)| v).collect())
    }
}

impl Embedder for HttpEmbedder {
    fn provider_id(&self) -> &str {
        &self.spec.provider_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        check_embed_input(texts)?;
        let mut out: Vec<EmbeddingVector> = Vec::with_capacity(texts.len());
        let mut expected_dim: Option<usize> = None;
        for batch in texts.chunks(self.spec.batch_size) {
            for values in self.embed_batch(batch)? {
                let dim = *expected_dim.get_or_insert(values.len());
                if values.len() != dim {
                    return Err(BackendError::InconsistentDim {
                        expected: dim,
                        found: values.len(),
                        index: out.len(),
                    });
                }
                let vector = EmbeddingVector::new(values, self.spec.provider_id.clone())
                    .map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
                out.push(vector);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let policy = RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(300),
            jitter: false,
        };
        assert_eq!(policy.delay_after(1), Duration::from_millis(100));
        assert_eq!(policy.delay_after(2), Duration::from_millis(200));
        assert_eq!(policy.delay_after(3), Duration::from_millis(300));
        let jittered = RetryPolicy { jitter: true, ..policy };
        let d = jittered.delay_after(1);
        assert!(d >= Duration::from_millis(100) && d < Duration::from_millis(150));
    }

    #[test]
    fn retryable_statuses() {
        assert!(is_retryable(StatusCode::TOO_MANY_REQUESTS));
        assert!(is_retryable(StatusCode::BAD_GATEWAY));
        assert!(!is_retryable(StatusCode::BAD_REQUEST));
        assert!(!is_retryable(StatusCode::UNAUTHORIZED));
    }

    #[test]
    fn url_joining() {
        assert_eq!(join_url("http://h/v1/", "embeddings"), "http://h/v1/embeddings");
        assert_eq!(join_url("http://h/v1", "chat/completions"), "http://h/v1/chat/completions");
    }
}
