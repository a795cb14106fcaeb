//! ROUGE-1, ROUGE-2 and ROUGE-L as balanced F-measures.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::primitives::{tokenize, Token};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    pub rouge_l_f: f64,
}

impl RougeScores {
    pub const PERFECT: RougeScores = RougeScores {
        rouge1_f: 1.0,
        rouge2_f: 1.0,
        rouge_l_f: 1.0,
    };
    pub const ZERO: RougeScores = RougeScores {
        rouge1_f: 0.0,
        rouge2_f: 0.0,
        rouge_l_f: 0.0,
    };
}

fn f1(overlap: usize, candidate_len: usize, reference_len: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    // 2PR / (P + R) reduces to 2o / (|c| + |r|); the reduced form is exactly
    // symmetric in its arguments.
    2.0 * overlap as f64 / (candidate_len + reference_len) as f64
}

fn ngram_counts(tokens: &[Token], n: usize) -> HashMap<&[Token], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn clipped_overlap(candidate: &[Token], reference: &[Token], n: usize) -> usize {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    cand.iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum()
}

fn ngram_f1(candidate: &[Token], reference: &[Token], n: usize) -> f64 {
    let cand_len = candidate.len().saturating_sub(n - 1);
    let ref_len = reference.len().saturating_sub(n - 1);
    if cand_len == 0 && ref_len == 0 {
        // Too short for any n-gram on either side: only an exact token match
        // counts as agreement.
        return if candidate == reference { 1.0 } else { 0.0 };
    }
    f1(clipped_overlap(candidate, reference, n), cand_len, ref_len)
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diagonal = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y {
                diagonal + 1
            } else {
                above.max(row[j])
            };
            diagonal = above;
        }
    }
    row[b.len()]
}

pub fn rouge_tokens(candidate: &[Token], reference: &[Token]) -> RougeScores {
    match (candidate.is_empty(), reference.is_empty()) {
        (true, true) => return RougeScores::PERFECT,
        (true, false) | (false, true) => return RougeScores::ZERO,
        _ => {}
    }
    RougeScores {
        rouge1_f: ngram_f1(candidate, reference, 1),
        rouge2_f: ngram_f1(candidate, reference, 2),
        rouge_l_f: f1(lcs_len(candidate, reference), candidate.len(), reference.len()),
    }
}

pub fn rouge(candidate: &str, reference: &str) -> RougeScores {
    rouge_tokens(&tokenize(candidate), &tokenize(reference))
}
