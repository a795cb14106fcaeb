use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::Transcript;

/// Configuration slice a metric is aggregated over. `prompt_index: None`
/// pools every prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SliceKey {
    pub k: usize,
    pub rounds: u32,
    pub prompt_index: Option<usize>,
}

impl SliceKey {
    pub fn pooled(k: usize, rounds: u32) -> Self {
        Self {
            k,
            rounds,
            prompt_index: None,
        }
    }

    pub fn final_round(&self) -> u32 {
        self.rounds + 1
    }

    /// "R0" for the initial round, "Final" for synthesis, "R{n}" otherwise.
    pub fn round_label(&self, round: u32) -> String {
        round_label(round, self.rounds)
    }
}

pub fn round_label(round: u32, rounds: u32) -> String {
    if round == rounds + 1 {
        "Final".to_owned()
    } else {
        format!("R{round}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub round: u32,
    pub value: f64,
    pub n_samples: usize,
}

/// A round with no value and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub round: u32,
    pub reason: String,
}

/// Per-round values of one metric over one slice, for one agent, one pair, or
/// pooled (empty label).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric_name: String,
    pub slice: SliceKey,
    pub label: String,
    pub points: Vec<SeriesPoint>,
    pub gaps: Vec<Gap>,
}

impl MetricSeries {
    pub fn new(metric_name: impl Into<String>, slice: SliceKey, label: impl Into<String>) -> Self {
        Self {
            metric_name: metric_name.into(),
            slice,
            label: label.into(),
            points: Vec::new(),
            gaps: Vec::new(),
        }
    }

    /// Appends a point. Panics if rounds would not be strictly increasing or
    /// `n_samples` is zero, both programming errors.
    pub fn push(&mut self, round: u32, value: f64, n_samples: usize) {
        assert!(n_samples >= 1, "a series point needs at least one sample");
        if let Some(last) = self.points.last() {
            assert!(round > last.round, "series rounds must increase: {} after {}", round, last.round);
        }
        self.points.push(SeriesPoint {
            round,
            value,
            n_samples,
        });
    }

    pub fn gap(&mut self, round: u32, reason: impl Into<String>) {
        self.gaps.push(Gap {
            round,
            reason: reason.into(),
        });
    }

    /// Pushes the mean of `samples`, or records a gap when there are none.
    pub fn push_mean(&mut self, round: u32, samples: &[f64], empty_reason: &str) {
        if samples.is_empty() {
            self.gap(round, empty_reason);
        } else {
            self.push(round, samples.iter().sum::<f64>() / samples.len() as f64, samples.len());
        }
    }

    pub fn value_at(&self, round: u32) -> Option<f64> {
        self.points.iter().find(|p| p.round == round).map(|p| p.value)
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Groups transcripts by `(k, R)`, pooling prompts. Incomplete transcripts
/// are kept; metric code skips whatever codes they lack.
pub fn group_by_slice(transcripts: &[Transcript]) -> BTreeMap<SliceKey, Vec<&Transcript>> {
    let mut out: BTreeMap<SliceKey, Vec<&Transcript>> = BTreeMap::new();
    for t in transcripts {
        out.entry(SliceKey::pooled(t.group_size(), t.rounds)).or_default().push(t);
    }
    out
}

/// Agent ids in order of first appearance across the slice's rosters.
pub fn slice_agents<'a>(transcripts: &[&'a Transcript]) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for t in transcripts {
        for a in &t.agents {
            if !out.contains(&a.agent_id.as_str()) {
                out.push(&a.agent_id);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        let s = SliceKey::pooled(3, 4);
        assert_eq!(s.round_label(0), "R0");
        assert_eq!(s.round_label(2), "R2");
        assert_eq!(s.round_label(5), "Final");
    }

    #[test]
    fn mean_or_gap() {
        let mut s = MetricSeries::new("m", SliceKey::pooled(2, 1), "");
        s.push_mean(0, &[1.0, 0.0], "none");
        s.push_mean(1, &[], "none");
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.value_at(0), Some(0.5));
        assert_eq!(s.gaps, vec![Gap { round: 1, reason: "none".into() }]);
    }

    #[test]
    #[should_panic]
    fn rounds_must_increase() {
        let mut s = MetricSeries::new("m", SliceKey::pooled(2, 1), "");
        s.push(1, 0.0, 1);
        s.push(1, 0.0, 1);
    }
}
