//! Code stability between an agent's consecutive rounds.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{tokenize, Code, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("round_gap: previous round {prev}, current round {curr}")]
    RoundGap { prev: u32, curr: u32 },
    #[error("agent_mismatch: {prev} vs {curr}")]
    AgentMismatch { prev: String, curr: String },
}

impl StabilityError {
    pub fn code(&self) -> &'static str {
        match self {
            StabilityError::RoundGap { .. } => "round_gap",
            StabilityError::AgentMismatch { .. } => "agent_mismatch",
        }
    }
}

/// Both stability readings: string identity and multiset token retention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityScores {
    pub exact_match: f64,
    pub token_retention: f64,
}

/// `|tokens(prev) ∩ tokens(curr)|` as multisets.
pub fn multiset_intersection(prev: &[Token], curr: &[Token]) -> usize {
    let mut remaining: HashMap<&Token, usize> = HashMap::new();
    for t in curr {
        *remaining.entry(t).or_insert(0) += 1;
    }
    let mut shared = 0;
    for t in prev {
        if let Some(n) = remaining.get_mut(t) {
            if *n > 0 {
                *n -= 1;
                shared += 1;
            }
        }
    }
    shared
}

pub fn stability(prev: &Code, curr: &Code) -> Result<StabilityScores, StabilityError> {
    if prev.agent_id != curr.agent_id {
        return Err(StabilityError::AgentMismatch {
            prev: prev.agent_id.clone(),
            curr: curr.agent_id.clone(),
        });
    }
    if curr.round != prev.round + 1 {
        return Err(StabilityError::RoundGap {
            prev: prev.round,
            curr: curr.round,
        });
    }
    Ok(stability_texts(&prev.text, &curr.text))
}

/// Stability of two raw texts without the round bookkeeping.
pub fn stability_texts(prev: &str, curr: &str) -> StabilityScores {
    let exact = prev.trim() == curr.trim();
    let prev_tokens = tokenize(prev);
    let curr_tokens = tokenize(curr);
    let token_retention = if prev_tokens.is_empty() && curr_tokens.is_empty() {
        1.0
    } else {
        multiset_intersection(&prev_tokens, &curr_tokens) as f64 / prev_tokens.len().max(1) as f64
    };
    StabilityScores {
        exact_match: if exact { 1.0 } else { 0.0 },
        token_retention,
    }
}
