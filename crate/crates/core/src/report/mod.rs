//! Aggregation into summary tables and deterministic exports.

mod export;
mod series;
mod tables;

use thiserror::Error;

pub use export::{
    export, fmt6, grid_table, influence_table, rouge_table, series_table, write_atomic, Manifest, ManifestEntry,
    Table, MANIFEST_FILE, SERIES_HEADER,
};
pub use series::{group_by_slice, round_label, slice_agents, Gap, MetricSeries, SeriesPoint, SliceKey};
pub use tables::{final_round_rouge_table, id_summary, IdSummary, RougeLSummaryCell, RougeTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("io_error: {0}")]
    Io(String),
    #[error("too_few_rounds: {metric} has {present} round(s), need 2")]
    TooFewRounds { metric: String, present: usize },
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::Io(_) => "io_error",
            ReportError::TooFewRounds { .. } => "too_few_rounds",
        }
    }

    fn csv(e: csv::Error) -> Self {
        ReportError::Io(e.to_string())
    }
}
