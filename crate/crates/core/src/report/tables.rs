use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::series::{round_label, MetricSeries};
use super::ReportError;
use crate::engine::Transcript;
use crate::lexmetrics::rouge;

/// Final-round ROUGE-L agreement for one `(prompt, k, R)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeLSummaryCell {
    pub prompt_index: usize,
    pub k: usize,
    pub rounds: u32,
    /// Mean over agent pairs, then mean over discussions.
    pub avg_final: f64,
    /// Max over agent pairs, then mean over discussions.
    pub max_final: f64,
    pub n_discussions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeTable {
    pub cells: Vec<RougeLSummaryCell>,
    pub notes: Vec<String>,
}

pub fn final_round_rouge_table(transcripts: &[Transcript]) -> RougeTable {
    let mut groups: BTreeMap<(usize, usize, u32), Vec<&Transcript>> = BTreeMap::new();
    for t in transcripts {
        groups.entry((t.prompt_index, t.group_size(), t.rounds)).or_default().push(t);
    }
    let mut table = RougeTable::default();
    for ((prompt_index, k, rounds), group) in groups {
        let mut avgs = Vec::new();
        let mut maxes = Vec::new();
        for t in group {
            let codes: Vec<&String> = t.final_codes.values().collect();
            let scores: Vec<f64> = codes
                .iter()
                .enumerate()
                .flat_map(|(i, a)| codes[i + 1..].iter().map(move |b| rouge(a, b).rouge_l_f))
                .collect();
            if scores.is_empty() {
                continue;
            }
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // Summation rounding can nudge a mean of equal values past their max.
            let avg = (scores.iter().sum::<f64>() / scores.len() as f64).min(max);
            avgs.push(avg);
            maxes.push(max);
        }
        if avgs.is_empty() {
            table.notes.push(format!(
                "rouge cell prompt={prompt_index} k={k} R={rounds} omitted: no discussion has two final codes"
            ));
            continue;
        }
        let n = avgs.len() as f64;
        let avg_final = avgs.iter().sum::<f64>() / n;
        let max_final = (maxes.iter().sum::<f64>() / n).max(avg_final);
        table.cells.push(RougeLSummaryCell {
            prompt_index,
            k,
            rounds,
            avg_final,
            max_final,
            n_discussions: avgs.len(),
        });
    }
    table
}

/// Initial-to-final change of a pooled dimension series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdSummary {
    pub k: usize,
    pub rounds: u32,
    pub initial_id: f64,
    pub final_id: f64,
    pub delta: f64,
    /// Most negative difference between consecutive present rounds, or the
    /// smallest difference when nothing drops.
    pub steepest_drop: f64,
    /// Round ending the steepest difference.
    pub drop_round: u32,
    pub drop_label: String,
    pub notes: Vec<String>,
}

pub fn id_summary(series: &MetricSeries) -> Result<IdSummary, ReportError> {
    let points = &series.points;
    if points.len() < 2 {
        return Err(ReportError::TooFewRounds {
            metric: series.metric_name.clone(),
            present: points.len(),
        });
    }
    let rounds = series.slice.rounds;
    let mut notes = Vec::new();
    let (first, last) = (points[0], points[points.len() - 1]);
    if first.round != 0 {
        notes.push(format!("initial value taken from {}", round_label(first.round, rounds)));
    }
    if last.round != series.slice.final_round() {
        notes.push(format!("final value taken from {}", round_label(last.round, rounds)));
    }
    let mut steepest = (f64::INFINITY, 0u32);
    for w in points.windows(2) {
        if w[1].round != w[0].round + 1 {
            notes.push(format!(
                "difference {}→{} bridges missing rounds",
                round_label(w[0].round, rounds),
                round_label(w[1].round, rounds)
            ));
        }
        let diff = w[1].value - w[0].value;
        if diff < steepest.0 {
            steepest = (diff, w[1].round);
        }
    }
    Ok(IdSummary {
        k: series.slice.k,
        rounds,
        initial_id: first.value,
        final_id: last.value,
        delta: last.value - first.value,
        steepest_drop: steepest.0,
        drop_round: steepest.1,
        drop_label: round_label(steepest.1, rounds),
        notes,
    })
}
