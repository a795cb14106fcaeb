//! Per-round embedding-space series over transcripts.

use serde::{Deserialize, Serialize};

use super::embed::CodeEmbeddings;
use super::twonn::twonn_id;
use crate::engine::Transcript;
use crate::primitives::{cosine, EmbeddingVector};
use crate::report::{group_by_slice, slice_agents, MetricSeries, SliceKey};

pub const POOLED_LABEL: &str = "pooled";

fn embedded<'e>(t: &Transcript, agent: &str, round: u32, emb: &'e CodeEmbeddings) -> Option<&'e EmbeddingVector> {
    emb.get(&t.code(agent, round)?.text)
}

fn id_series(
    slice: SliceKey,
    group: &[&Transcript],
    agents: &[&str],
    label: &str,
    emb: &CodeEmbeddings,
    discard_fraction: f64,
) -> MetricSeries {
    let mut series = MetricSeries::new("twonn_id", slice, label);
    for round in 0..=slice.final_round() {
        let points: Vec<EmbeddingVector> = group
            .iter()
            .flat_map(|t| agents.iter().filter_map(move |a| embedded(t, a, round, emb)))
            .cloned()
            .collect();
        match twonn_id(&points, discard_fraction) {
            Ok(r) => series.push(round, r.id_estimate, r.n_points_used),
            Err(e) => series.gap(round, e.to_string()),
        }
    }
    series
}

/// TwoNN dimension of every agent's codes pooled per round, one series per
/// slice. Rounds where the estimator fails become gaps.
pub fn pooled_id_series(transcripts: &[Transcript], emb: &CodeEmbeddings, discard_fraction: f64) -> Vec<MetricSeries> {
    group_by_slice(transcripts)
        .into_iter()
        .map(|(slice, group)| {
            let agents = slice_agents(&group);
            id_series(slice, &group, &agents, POOLED_LABEL, emb, discard_fraction)
        })
        .collect()
}

/// TwoNN dimension of each agent's codes per round, labelled by agent id.
pub fn per_model_id_series(transcripts: &[Transcript], emb: &CodeEmbeddings, discard_fraction: f64) -> Vec<MetricSeries> {
    let mut out = Vec::new();
    for (slice, group) in group_by_slice(transcripts) {
        for agent in slice_agents(&group) {
            out.push(id_series(slice, &group, &[agent], agent, emb, discard_fraction));
        }
    }
    out
}

/// `values[i][j]`: mean cosine between agent `i`'s code at `round` and agent
/// `j`'s code at `round - 1`, over discussions where both exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceMatrix {
    pub slice: SliceKey,
    pub round: u32,
    pub agent_ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub n_samples: Vec<Vec<usize>>,
}

impl InfluenceMatrix {
    pub fn entry(&self, target: &str, source: &str) -> Option<f64> {
        let i = self.agent_ids.iter().position(|a| a == target)?;
        let j = self.agent_ids.iter().position(|a| a == source)?;
        self.values[i][j]
    }
}

pub fn influence_matrices(transcripts: &[Transcript], emb: &CodeEmbeddings) -> Vec<InfluenceMatrix> {
    let mut out = Vec::new();
    for (slice, group) in group_by_slice(transcripts) {
        let agents = slice_agents(&group);
        let k = agents.len();
        for round in 1..=slice.final_round() {
            let mut values = vec![vec![None; k]; k];
            let mut n_samples = vec![vec![0; k]; k];
            for (i, target) in agents.iter().enumerate() {
                for (j, source) in agents.iter().enumerate() {
                    let samples: Vec<f64> = group
                        .iter()
                        .filter_map(|t| {
                            let a = embedded(t, target, round, emb)?;
                            let b = embedded(t, source, round - 1, emb)?;
                            cosine(a, b).ok()
                        })
                        .collect();
                    if !samples.is_empty() {
                        values[i][j] = Some(samples.iter().sum::<f64>() / samples.len() as f64);
                        n_samples[i][j] = samples.len();
                    }
                }
            }
            out.push(InfluenceMatrix {
                slice,
                round,
                agent_ids: agents.iter().map(|a| a.to_string()).collect(),
                values,
                n_samples,
            });
        }
    }
    out
}

/// Mean cosine over unordered same-round cross-agent pairs, averaged over
/// discussions.
pub fn mean_pairwise_cosine_series(transcripts: &[Transcript], emb: &CodeEmbeddings) -> Vec<MetricSeries> {
    let mut out = Vec::new();
    for (slice, group) in group_by_slice(transcripts) {
        let agents = slice_agents(&group);
        let mut series = MetricSeries::new("mean_pairwise_cosine", slice, "");
        for round in 0..=slice.final_round() {
            let per_discussion: Vec<f64> = group
                .iter()
                .filter_map(|t| {
                    let vectors: Vec<&EmbeddingVector> =
                        agents.iter().filter_map(|a| embedded(t, a, round, emb)).collect();
                    let cosines: Vec<f64> = vectors
                        .iter()
                        .enumerate()
                        .flat_map(|(i, a)| vectors[i + 1..].iter().filter_map(move |b| cosine(a, b).ok()))
                        .collect();
                    (!cosines.is_empty()).then(|| cosines.iter().sum::<f64>() / cosines.len() as f64)
                })
                .collect();
            series.push_mean(round, &per_discussion, "no discussion has two embedded codes at this round");
        }
        out.push(series);
    }
    out
}
