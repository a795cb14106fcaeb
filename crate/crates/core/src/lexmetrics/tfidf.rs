//! TF-IDF self-consistency.
//!
//! Weights are raw term counts times smoothed idf `ln((1 + N) / (1 + df)) + 1`,
//! and every document vector is L2-normalized.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::primitives::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TfIdfError {
    #[error("nothing_to_compare: no aligned output pairs")]
    NothingToCompare,
    #[error("misaligned: {left} outputs at t vs {right} at t+1")]
    Misaligned { left: usize, right: usize },
    #[error("empty_corpus: TF-IDF needs at least one document")]
    EmptyCorpus,
}

impl TfIdfError {
    pub fn code(&self) -> &'static str {
        match self {
            TfIdfError::NothingToCompare => "nothing_to_compare",
            TfIdfError::Misaligned { .. } => "misaligned",
            TfIdfError::EmptyCorpus => "empty_corpus",
        }
    }
}

/// Immutable vocabulary snapshot fitted on a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    idf: HashMap<String, f64>,
    documents: usize,
}

/// Sparse, L2-normalized document vector keyed by term (sorted).
pub type SparseVector = BTreeMap<String, f64>;

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Result<Self, TfIdfError> {
        if corpus.is_empty() {
            return Err(TfIdfError::EmptyCorpus);
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in corpus {
            let mut terms: Vec<String> = tokenize(doc.as_ref()).into_iter().map(|t| t.into_string()).collect();
            terms.sort_unstable();
            terms.dedup();
            for term in terms {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let n = corpus.len() as f64;
        let idf = df
            .into_iter()
            .map(|(term, d)| (term, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .collect();
        Ok(Self {
            idf,
            documents: corpus.len(),
        })
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.idf.get(term).copied()
    }

    /// Terms outside the fitted vocabulary are ignored.
    pub fn transform(&self, doc: &str) -> SparseVector {
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        for token in tokenize(doc) {
            if let Some(&idf) = self.idf.get(token.as_str()) {
                *counts.entry(token.into_string()).or_insert(0.0) += idf;
            }
        }
        let norm = counts.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            counts.values_mut().for_each(|w| *w /= norm);
        }
        counts
    }
}

/// Cosine of two normalized sparse vectors. Two empty vectors agree (1.0);
/// one empty vector shares nothing (0.0).
pub fn sparse_cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(term, w)| large.get(term).map(|v| w * v))
        .sum();
    dot.clamp(0.0, 1.0)
}

/// Mean TF-IDF cosine between aligned outputs at round `t` and `t + 1`.
pub fn self_consistency<S: AsRef<str>>(
    outputs_t: &[S],
    outputs_t1: &[S],
    corpus: &[S],
) -> Result<f64, TfIdfError> {
    if outputs_t.len() != outputs_t1.len() {
        return Err(TfIdfError::Misaligned {
            left: outputs_t.len(),
            right: outputs_t1.len(),
        });
    }
    if outputs_t.is_empty() {
        return Err(TfIdfError::NothingToCompare);
    }
    let model = TfIdfModel::fit(corpus)?;
    Ok(self_consistency_with(&model, outputs_t, outputs_t1))
}

/// As [`self_consistency`] with a pre-fitted model; inputs must be aligned
/// and non-empty.
pub fn self_consistency_with<S: AsRef<str>>(model: &TfIdfModel, outputs_t: &[S], outputs_t1: &[S]) -> f64 {
    let total: f64 = outputs_t
        .iter()
        .zip(outputs_t1)
        .map(|(a, b)| sparse_cosine(&model.transform(a.as_ref()), &model.transform(b.as_ref())))
        .sum();
    total / outputs_t.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_documents() {
        let corpus = ["code one", "code two", "other words"];
        let v = self_consistency(&["code one"], &["code one"], &corpus).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_documents() {
        let corpus = ["red apple", "blue sky"];
        assert_eq!(self_consistency(&["red apple"], &["blue sky"], &corpus).unwrap(), 0.0);
    }

    #[test]
    fn toy_corpus_matches_hand_computation() {
        // idf(red) = idf(blue) = ln(3/2) + 1, idf(code) = 1, so the cosine is
        // 1 / (idf(red)^2 + 1). Frozen from an independent hand calculation.
        let corpus = ["red code", "blue code"];
        let v = self_consistency(&["red code"], &["blue code"], &corpus).unwrap();
        assert_eq!(format!("{v:.6}"), "0.336097");
    }

    #[test]
    fn errors() {
        let corpus = ["a"];
        let empty: [&str; 0] = [];
        assert_eq!(self_consistency(&empty, &empty, &corpus).unwrap_err().code(), "nothing_to_compare");
        assert_eq!(self_consistency(&["a"], &empty, &corpus).unwrap_err().code(), "misaligned");
        assert_eq!(self_consistency(&["a"], &["a"], &empty).unwrap_err().code(), "empty_corpus");
    }

    #[test]
    fn fitted_idf_values() {
        let model = TfIdfModel::fit(&["red code", "blue code"]).unwrap();
        assert_eq!(model.idf("code"), Some(1.0));
        assert!((model.idf("red").unwrap() - (1.5f64.ln() + 1.0)).abs() < 1e-15);
        assert_eq!(model.idf("green"), None);
        let v = model.transform("code code red");
        let norm: f64 = v.values().map(|w| w * w).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
