//! Shared domain types, tokenization and vector primitives.
//!
//! Every metric in the crate tokenizes through [`tokenize`] so that ROUGE,
//! stability and confidence operate on the same surface units.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A lowercased, non-empty run of alphanumeric characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Lowercase `text` and split it on every maximal run of non-alphanumeric
/// characters. Order is preserved; empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|piece| !piece.is_empty())
        .map(|piece| Token(piece.to_owned()))
        .collect()
}

/// Joins tokens with single spaces.
pub fn join_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("dim_mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("zero_vector: cosine is undefined for an all-zero vector")]
    ZeroVector,
    #[error("empty_vector: embedding must have at least one component")]
    Empty,
    #[error("non_finite: component {index} is not finite")]
    NonFinite { index: usize },
}

impl VectorError {
    pub fn code(&self) -> &'static str {
        match self {
            VectorError::DimMismatch { .. } => "dim_mismatch",
            VectorError::ZeroVector => "zero_vector",
            VectorError::Empty => "empty_vector",
            VectorError::NonFinite { .. } => "non_finite",
        }
    }
}

/// Fixed-dimension embedding tagged with the provider that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    provider_id: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, provider_id: impl Into<String>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite { index });
        }
        Ok(Self {
            values,
            provider_id: provider_id.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Cosine similarity on raw slices, clamped to `[-1, 1]`.
///
/// The denominator is `sqrt(|a|^2 |b|^2)` so that `cosine(a, a)` is exactly
/// `1.0` under IEEE rounding.
pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64, VectorError> {
    if a.len() != b.len() {
        return Err(VectorError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let na = dot(a, a);
    let nb = dot(b, b);
    if na == 0.0 || nb == 0.0 {
        return Err(VectorError::ZeroVector);
    }
    let value = dot(a, b) / (na * nb).sqrt();
    Ok(value.clamp(-1.0, 1.0))
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, VectorError> {
    cosine_slices(&a.values, &b.values)
}

/// Discussion phase of an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Initial,
    Refinement,
    Synthesis,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::Refinement => "refinement",
            Phase::Synthesis => "synthesis",
        }
    }

    /// Whether `round` is a legal round index for this phase in a discussion
    /// with `rounds` refinement rounds.
    pub fn accepts_round(self, round: u32, rounds: u32) -> bool {
        match self {
            Phase::Initial => round == 0,
            Phase::Refinement => (1..=rounds).contains(&round),
            Phase::Synthesis => round == rounds + 1,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One agent turn.
///
/// Round 0 is the initial code, rounds `1..=R` are refinements and round
/// `R + 1` is the final synthesis. Synthesis turns are not summarized, so
/// their `summary` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub agent_id: String,
    pub phase: Phase,
    pub round: u32,
    pub raw_text: String,
    pub summary: String,
}

impl Utterance {
    /// The code this utterance proposes: the raw completion, trimmed.
    pub fn code(&self) -> Code {
        Code {
            text: self.raw_text.trim().to_owned(),
            agent_id: self.agent_id.clone(),
            round: self.round,
        }
    }
}

/// A short label proposed by one agent at one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Code {
    pub text: String,
    pub agent_id: String,
    pub round: u32,
}

impl Code {
    pub fn new(text: impl Into<String>, agent_id: impl Into<String>, round: u32) -> Self {
        Self {
            text: text.into(),
            agent_id: agent_id.into(),
            round,
        }
    }
}
