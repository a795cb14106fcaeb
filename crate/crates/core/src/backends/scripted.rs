//! Deterministic scripted agents and embeddings.
//!
//! Plans are JSON objects keyed by agent id:
//!
//! ```json
//! {
//!   "mistral": {
//!     "initial": "Misguided Compassion",
//!     "round_1": "Compassion Fatigue",
//!     "synthesis": "Compassion Fatigue",
//!     "default": "optional fallback for any turn",
//!     "summary_rule": "first_sentence"
//!   }
//! }
//! ```
//!
//! Outputs may contain `{item_id}` and `{agent_id}` placeholders.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_embed_input, check_messages, AgentSpec, BackendError, ChatBackend, ChatMessage, Embedder, TurnRequest};
use crate::primitives::{EmbeddingVector, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TurnKey {
    Initial,
    Round(u32),
    Synthesis,
}

impl TurnKey {
    pub fn for_turn(phase: Phase, round: u32) -> Self {
        match phase {
            Phase::Initial => TurnKey::Initial,
            Phase::Refinement => TurnKey::Round(round),
            Phase::Synthesis => TurnKey::Synthesis,
        }
    }
}

impl fmt::Display for TurnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TurnKey::Initial => f.write_str("initial"),
            TurnKey::Round(r) => write!(f, "round_{r}"),
            TurnKey::Synthesis => f.write_str("synthesis"),
        }
    }
}

impl FromStr for TurnKey {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "initial" => Ok(TurnKey::Initial),
            "synthesis" => Ok(TurnKey::Synthesis),
            _ => s
                .strip_prefix("round_")
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|&n| n >= 1)
                .map(TurnKey::Round)
                .ok_or_else(|| BackendError::PlanParse(format!("unknown turn key {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryRule {
    #[default]
    FirstSentence,
    Echo,
}

impl SummaryRule {
    pub fn apply(self, text: &str) -> String {
        match self {
            SummaryRule::Echo => text.to_owned(),
            SummaryRule::FirstSentence => {
                let trimmed = text.trim();
                match trimmed.find(['.', '!', '?']) {
                    Some(end) => trimmed[..=end].to_owned(),
                    None => trimmed.to_owned(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedAgentPlan {
    pub agent_id: String,
    pub outputs: BTreeMap<TurnKey, String>,
    pub default: Option<String>,
    pub summary_rule: SummaryRule,
}

impl ScriptedAgentPlan {
    pub fn new(agent_id: impl Into<String>) -> Self {
        Self {
            agent_id: agent_id.into(),
            outputs: BTreeMap::new(),
            default: None,
            summary_rule: SummaryRule::default(),
        }
    }

    pub fn with_output(mut self, key: TurnKey, text: impl Into<String>) -> Self {
        self.outputs.insert(key, text.into());
        self
    }

    pub fn with_default(mut self, text: impl Into<String>) -> Self {
        self.default = Some(text.into());
        self
    }

    pub fn with_summary_rule(mut self, rule: SummaryRule) -> Self {
        self.summary_rule = rule;
        self
    }

    fn output_for(&self, key: TurnKey) -> Option<&str> {
        self.outputs.get(&key).or(self.default.as_ref()).map(String::as_str)
    }

    /// Whether the plan answers every turn of a discussion with `rounds`
    /// refinement rounds.
    pub fn covers(&self, rounds: u32) -> bool {
        self.default.is_some()
            || std::iter::once(TurnKey::Initial)
                .chain((1..=rounds).map(TurnKey::Round))
                .chain(std::iter::once(TurnKey::Synthesis))
                .all(|k| self.outputs.contains_key(&k))
    }
}

/// Chat backend that replays per-agent plans. Never touches the network.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    plans: BTreeMap<String, ScriptedAgentPlan>,
}

impl ScriptedBackend {
    pub fn new(plans: impl IntoIterator<Item = ScriptedAgentPlan>) -> Self {
        Self {
            plans: plans.into_iter().map(|p| (p.agent_id.clone(), p)).collect(),
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self, BackendError> {
        let raw: BTreeMap<String, BTreeMap<String, String>> =
            serde_json::from_str(json).map_err(|e| BackendError::PlanParse(e.to_string()))?;
        let mut plans = Vec::with_capacity(raw.len());
        for (agent_id, entries) in raw {
            let mut plan = ScriptedAgentPlan::new(agent_id);
            for (key, value) in entries {
                match key.as_str() {
                    "default" => plan.default = Some(value),
                    "summary_rule" => {
                        plan.summary_rule = serde_json::from_value(serde_json::Value::String(value.clone()))
                            .map_err(|_| BackendError::PlanParse(format!("unknown summary_rule {value:?}")))?
                    }
                    _ => {
                        plan.outputs.insert(key.parse()?, value);
                    }
                }
            }
            plans.push(plan);
        }
        Ok(Self::new(plans))
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| BackendError::PlanParse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&json)
    }

    pub fn plan(&self, agent_id: &str) -> Option<&ScriptedAgentPlan> {
        self.plans.get(agent_id)
    }

    fn plan_for(&self, spec: &AgentSpec) -> Result<&ScriptedAgentPlan, BackendError> {
        self.plans
            .get(&spec.agent_id)
            .ok_or_else(|| BackendError::UnknownAgent(spec.agent_id.clone()))
    }
}

impl ChatBackend for ScriptedBackend {
    fn chat_complete(
        &self,
        spec: &AgentSpec,
        turn: &TurnRequest,
        messages: &[ChatMessage],
    ) -> Result<String, BackendError> {
        check_messages(messages)?;
        let plan = self.plan_for(spec)?;
        let key = TurnKey::for_turn(turn.phase, turn.round);
        let template = plan.output_for(key).ok_or_else(|| BackendError::MissingTurn {
            agent_id: spec.agent_id.clone(),
            turn: key.to_string(),
        })?;
        let text = template
            .replace("{item_id}", &turn.item_id)
            .replace("{agent_id}", &spec.agent_id);
        if text.is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        Ok(text)
    }

    fn summarize_turn(
        &self,
        spec: &AgentSpec,
        _turn: &TurnRequest,
        turn_text: &str,
    ) -> Result<String, BackendError> {
        if turn_text.is_empty() {
            return Err(BackendError::Precondition("turn_text must be non-empty".into()));
        }
        let summary = self.plan_for(spec)?.summary_rule.apply(turn_text);
        if summary.is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        Ok(summary)
    }
}

/// Deterministic embeddings: explicit table entries where given, otherwise a
/// unit vector derived from SHA-256 of `(provider_id, text)` in counter mode.
///
/// The hash path uses only integer arithmetic, division and `sqrt`, so the
/// vectors are bit-identical across platforms.
#[derive(Debug, Clone)]
pub struct ScriptedEmbedder {
    provider_id: String,
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

pub const DEFAULT_EMBEDDING_DIM: usize = 384;

impl ScriptedEmbedder {
    pub fn new(provider_id: impl Into<String>, dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            provider_id: provider_id.into(),
            dim,
            table: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pins the vector returned for `text`.
    pub fn insert(&mut self, text: impl Into<String>, values: Vec<f64>) -> Result<(), BackendError> {
        if values.len() != self.dim {
            return Err(BackendError::InconsistentDim {
                expected: self.dim,
                found: values.len(),
                index: self.table.len(),
            });
        }
        self.table.insert(text.into(), values);
        Ok(())
    }

    pub fn with_entry(mut self, text: impl Into<String>, values: Vec<f64>) -> Result<Self, BackendError> {
        self.insert(text, values)?;
        Ok(self)
    }

    fn hash_vector(&self, text: &str) -> Vec<f64> {
        let mut values = Vec::with_capacity(self.dim);
        let mut counter: u64 = 0;
        while values.len() < self.dim {
            let mut hasher = Sha256::new();
            hasher.update((self.provider_id.len() as u64).to_le_bytes());
            hasher.update(self.provider_id.as_bytes());
            hasher.update(text.as_bytes());
            hasher.update(counter.to_le_bytes());
            let block = hasher.finalize();
            for chunk in block.chunks_exact(4) {
                if values.len() == self.dim {
                    break;
                }
                let word = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
                values.push(word as f64 / 2_147_483_648.0 - 1.0);
            }
            counter += 1;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        } else {
            values[0] = 1.0;
        }
        values
    }
}

impl Embedder for ScriptedEmbedder {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        check_embed_input(texts)?;
        texts
            .iter()
            .map(|text| {
                let values = match self.table.get(text) {
                    Some(v) => v.clone(),
                    None => self.hash_vector(text),
                };
                EmbeddingVector::new(values, self.provider_id.clone())
                    .map_err(|e| BackendError::InvalidResponse(e.to_string()))
            })
            .collect()
    }
}
