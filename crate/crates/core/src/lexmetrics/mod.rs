//! Surface-level convergence metrics over codes and utterances.

pub mod confidence;
pub mod rouge;
pub mod stability;
pub mod tfidf;

pub use confidence::{confidence, confidence_with, load_lexicon, Lexicon, LexiconError, Normalization};
pub use rouge::{rouge, RougeScores};
pub use stability::{stability, stability_texts, StabilityError, StabilityScores};
pub use tfidf::{self_consistency, TfIdfError, TfIdfModel};

use serde::{Deserialize, Serialize};

use crate::engine::Transcript;
use crate::report::{group_by_slice, slice_agents, MetricSeries};

fn pairs<T>(items: &[T]) -> impl Iterator<Item = (&T, &T)> {
    items
        .iter()
        .enumerate()
        .flat_map(move |(i, a)| items[i + 1..].iter().map(move |b| (a, b)))
}

/// Mean pairwise ROUGE among same-round codes, averaged over discussions.
/// Yields `rouge1_f`, `rouge2_f` and `rougeL_f` series per slice.
pub fn pairwise_rouge_series(transcripts: &[Transcript]) -> Vec<MetricSeries> {
    let mut out = Vec::new();
    for (slice, group) in group_by_slice(transcripts) {
        let mut series = [
            MetricSeries::new("rouge1_f", slice, ""),
            MetricSeries::new("rouge2_f", slice, ""),
            MetricSeries::new("rougeL_f", slice, ""),
        ];
        for round in 0..=slice.final_round() {
            let mut per_discussion: [Vec<f64>; 3] = Default::default();
            for t in &group {
                let codes = t.codes_at(round);
                let scores: Vec<RougeScores> = pairs(&codes).map(|(a, b)| rouge(&a.text, &b.text)).collect();
                if scores.is_empty() {
                    continue;
                }
                let n = scores.len() as f64;
                per_discussion[0].push(scores.iter().map(|s| s.rouge1_f).sum::<f64>() / n);
                per_discussion[1].push(scores.iter().map(|s| s.rouge2_f).sum::<f64>() / n);
                per_discussion[2].push(scores.iter().map(|s| s.rouge_l_f).sum::<f64>() / n);
            }
            for (s, samples) in series.iter_mut().zip(&per_discussion) {
                s.push_mean(round, samples, "no discussion has two codes at this round");
            }
        }
        out.extend(series);
    }
    out
}

/// Per-agent stability between rounds `t - 1` and `t` for `t = 1..=R+1`,
/// as `stability_exact_match` and `stability_token_retention` series.
pub fn stability_series(transcripts: &[Transcript]) -> Vec<MetricSeries> {
    let mut out = Vec::new();
    for (slice, group) in group_by_slice(transcripts) {
        for agent in slice_agents(&group) {
            let mut exact = MetricSeries::new("stability_exact_match", slice, agent);
            let mut retention = MetricSeries::new("stability_token_retention", slice, agent);
            for round in 1..=slice.final_round() {
                let scores: Vec<StabilityScores> = group
                    .iter()
                    .filter_map(|t| {
                        let prev = t.code(agent, round - 1)?;
                        let curr = t.code(agent, round)?;
                        stability(&prev, &curr).ok()
                    })
                    .collect();
                let reason = "no consecutive codes for this agent";
                exact.push_mean(round, &scores.iter().map(|s| s.exact_match).collect::<Vec<_>>(), reason);
                retention.push_mean(round, &scores.iter().map(|s| s.token_retention).collect::<Vec<_>>(), reason);
            }
            out.push(exact);
            out.push(retention);
        }
    }
    out
}

/// Which documents the TF-IDF vocabulary is fitted on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusScope {
    /// Every code of the analyzed agent within the slice.
    #[default]
    Agent,
    /// Every code of every agent within the slice.
    Slice,
}

/// Per-agent TF-IDF self-consistency between rounds `t - 1` and `t`,
/// aligned by discussion.
pub fn consistency_series(transcripts: &[Transcript], scope: CorpusScope) -> Vec<MetricSeries> {
    let mut out = Vec::new();
    for (slice, group) in group_by_slice(transcripts) {
        let agents = slice_agents(&group);
        let corpus_of = |who: Option<&str>| -> Vec<String> {
            group
                .iter()
                .flat_map(|t| t.utterances.iter())
                .filter(|u| who.is_none_or(|a| u.agent_id == a))
                .map(|u| u.code().text)
                .collect()
        };
        let slice_model = match scope {
            CorpusScope::Slice => TfIdfModel::fit(&corpus_of(None)).ok(),
            CorpusScope::Agent => None,
        };
        for agent in agents {
            let mut series = MetricSeries::new("self_consistency", slice, agent);
            let model = match scope {
                CorpusScope::Slice => slice_model.clone(),
                CorpusScope::Agent => TfIdfModel::fit(&corpus_of(Some(agent))).ok(),
            };
            for round in 1..=slice.final_round() {
                let (prev, curr): (Vec<String>, Vec<String>) = group
                    .iter()
                    .filter_map(|t| Some((t.code(agent, round - 1)?.text, t.code(agent, round)?.text)))
                    .unzip();
                match &model {
                    Some(model) if !prev.is_empty() => {
                        series.push(round, tfidf::self_consistency_with(model, &prev, &curr), prev.len())
                    }
                    _ => series.gap(round, TfIdfError::NothingToCompare.code()),
                }
            }
            out.push(series);
        }
    }
    out
}

/// Per-agent mean confidence of raw utterances at every round.
pub fn confidence_series(transcripts: &[Transcript], lexicon: &Lexicon, normalization: Normalization) -> Vec<MetricSeries> {
    let mut out = Vec::new();
    for (slice, group) in group_by_slice(transcripts) {
        for agent in slice_agents(&group) {
            let mut series = MetricSeries::new("confidence", slice, agent);
            for round in 0..=slice.final_round() {
                let values: Vec<f64> = group
                    .iter()
                    .filter_map(|t| t.utterance(agent, round))
                    .map(|u| confidence_with(&u.raw_text, lexicon, normalization))
                    .collect();
                series.push_mean(round, &values, "no utterance for this agent");
            }
            out.push(series);
        }
    }
    out
}
