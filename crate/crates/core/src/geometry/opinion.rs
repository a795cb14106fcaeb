//! Opinion–confidence points and per-round density grids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::embed::CodeEmbeddings;
use super::pca::{opinion_axis, PcaError};
use crate::engine::Transcript;
use crate::lexmetrics::{confidence_with, Lexicon, Normalization};

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionConfidencePoint {
    pub opinion: f64,
    pub confidence: f64,
    pub agent_id: String,
    pub round: u32,
}

/// Scope of min-max normalization for the confidence coordinate. Opinion is
/// always normalized over the whole set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceScaling {
    #[default]
    Global,
    PerRound,
}

/// Maps values onto [0, 1]. A constant input maps to 0.5 throughout.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.5; values.len()]
    }
}

/// One point per embedded utterance: the code's projection on the first
/// principal axis of all codes in the set, and the utterance's confidence.
pub fn opinion_confidence_points(
    transcripts: &[&Transcript],
    emb: &CodeEmbeddings,
    lexicon: &Lexicon,
    scaling: ConfidenceScaling,
) -> Result<Vec<OpinionConfidencePoint>, PcaError> {
    let mut rows: Vec<&[f64]> = Vec::new();
    let mut meta: Vec<(String, u32, f64)> = Vec::new();
    for t in transcripts {
        for u in &t.utterances {
            if let Some(v) = emb.get(&u.code().text) {
                rows.push(v.values());
                meta.push((u.agent_id.clone(), u.round, confidence_with(&u.raw_text, lexicon, Normalization::Tokens)));
            }
        }
    }
    let axis = opinion_axis(&rows)?;
    let opinion = min_max(&axis.projections);
    let raw_conf: Vec<f64> = meta.iter().map(|m| m.2).collect();
    let conf = match scaling {
        ConfidenceScaling::Global => min_max(&raw_conf),
        ConfidenceScaling::PerRound => {
            let mut by_round: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for (i, m) in meta.iter().enumerate() {
                by_round.entry(m.1).or_default().push(i);
            }
            let mut out = vec![0.0; raw_conf.len()];
            for idx in by_round.values() {
                let scaled = min_max(&idx.iter().map(|&i| raw_conf[i]).collect::<Vec<_>>());
                idx.iter().zip(scaled).for_each(|(&i, v)| out[i] = v);
            }
            out
        }
    };
    Ok(meta
        .into_iter()
        .zip(opinion.into_iter().zip(conf))
        .map(|((agent_id, round, _), (opinion, confidence))| OpinionConfidencePoint {
            opinion,
            confidence,
            agent_id,
            round,
        })
        .collect())
}

/// `bins × bins` histogram of one round, opinion on x, confidence on y.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundGrid {
    pub round: u32,
    pub bins: usize,
    counts: Vec<u64>,
}

impl RoundGrid {
    pub fn count(&self, x_bin: usize, y_bin: usize) -> u64 {
        self.counts[x_bin * self.bins + y_bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Non-empty cells as `(x_bin, y_bin, count)`, x-major.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(i, c)| (i / self.bins, i % self.bins, *c))
    }
}

fn bin_of(v: f64, bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

/// Panics when `bins < 2`.
pub fn opinion_confidence_grid(points: &[OpinionConfidencePoint], bins: usize) -> Vec<RoundGrid> {
    assert!(bins >= 2, "a grid needs at least 2 bins per axis");
    let mut grids: BTreeMap<u32, RoundGrid> = BTreeMap::new();
    for p in points {
        let grid = grids.entry(p.round).or_insert_with(|| RoundGrid {
            round: p.round,
            bins,
            counts: vec![0; bins * bins],
        });
        grid.counts[bin_of(p.opinion, bins) * bins + bin_of(p.confidence, bins)] += 1;
    }
    grids.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(opinion: f64, confidence: f64, round: u32) -> OpinionConfidencePoint {
        OpinionConfidencePoint {
            opinion,
            confidence,
            agent_id: "a".into(),
            round,
        }
    }

    #[test]
    fn corners_fill_each_cell_once() {
        let points = [pt(0.0, 0.0, 0), pt(1.0, 0.0, 0), pt(0.0, 1.0, 0), pt(1.0, 1.0, 0)];
        let grids = opinion_confidence_grid(&points, 2);
        assert_eq!(grids.len(), 1);
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(grids[0].count(x, y), 1);
            }
        }
    }

    #[test]
    fn single_point_and_conservation() {
        let grids = opinion_confidence_grid(&[pt(0.0, 0.0, 3)], DEFAULT_BINS);
        assert_eq!(grids[0].round, 3);
        assert_eq!(grids[0].count(0, 0), 1);
        assert_eq!(grids[0].occupied().collect::<Vec<_>>(), vec![(0, 0, 1)]);
        let many: Vec<_> = (0..37).map(|i| pt(i as f64 / 36.0, (i % 5) as f64 / 4.0, i % 3)).collect();
        let grids = opinion_confidence_grid(&many, 7);
        assert_eq!(grids.iter().map(RoundGrid::total).sum::<u64>(), 37);
        assert_eq!(grids[0].total(), 13);
    }

    #[test]
    fn min_max_edges() {
        assert_eq!(min_max(&[2.0, 4.0, 3.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(min_max(&[7.0, 7.0]), vec![0.5, 0.5]);
        assert!(min_max(&[]).is_empty());
    }
}
