//! Two-nearest-neighbour intrinsic dimension estimator.
//!
//! For each point the ratio `μ = r2 / r1` of its second- to first-nearest
//! neighbour distance follows a Pareto law with exponent `d`. The largest
//! `discard_fraction` of ratios are treated as right-censored at the largest
//! kept ratio, giving the closed-form estimate
//! `d = k / (Σ_{kept} ln μ + (N - k) ln μ_(k))`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{squared_euclidean, EmbeddingVector};

pub const MIN_POINTS: usize = 10;
pub const DEFAULT_DISCARD_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwoNnError {
    #[error("insufficient_points: {found} distinct points, need at least {MIN_POINTS}")]
    InsufficientPoints { found: usize },
    #[error("degenerate_geometry: every neighbour ratio is 1")]
    Degenerate,
    #[error("dim_mismatch: point {index} has dimension {found}, expected {expected}")]
    DimMismatch { index: usize, expected: usize, found: usize },
    #[error("invalid_discard_fraction: {0} is outside [0, 1)")]
    InvalidDiscardFraction(f64),
}

impl TwoNnError {
    pub fn code(&self) -> &'static str {
        match self {
            TwoNnError::InsufficientPoints { .. } => "insufficient_points",
            TwoNnError::Degenerate => "degenerate_geometry",
            TwoNnError::DimMismatch { .. } => "dim_mismatch",
            TwoNnError::InvalidDiscardFraction(_) => "invalid_discard_fraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoNnResult {
    pub id_estimate: f64,
    pub n_points_used: usize,
    pub n_discarded_duplicates: usize,
    pub discard_fraction: f64,
}

pub fn twonn_id(points: &[EmbeddingVector], discard_fraction: f64) -> Result<TwoNnResult, TwoNnError> {
    let rows: Vec<&[f64]> = points.iter().map(EmbeddingVector::values).collect();
    twonn_id_rows(&rows, discard_fraction)
}

/// As [`twonn_id`] over raw coordinate rows.
pub fn twonn_id_rows(rows: &[&[f64]], discard_fraction: f64) -> Result<TwoNnResult, TwoNnError> {
    if !(0.0..1.0).contains(&discard_fraction) {
        return Err(TwoNnError::InvalidDiscardFraction(discard_fraction));
    }
    if let Some(first) = rows.first() {
        if let Some((index, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != first.len()) {
            return Err(TwoNnError::DimMismatch {
                index,
                expected: first.len(),
                found: row.len(),
            });
        }
    }
    // +0.0 folds -0.0 into 0.0 so bitwise keys match numeric equality.
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(rows.len());
    let distinct: Vec<&[f64]> = rows
        .iter()
        .copied()
        .filter(|r| seen.insert(r.iter().map(|v| (v + 0.0).to_bits()).collect()))
        .collect();
    let n = distinct.len();
    if n < MIN_POINTS {
        return Err(TwoNnError::InsufficientPoints { found: n });
    }

    let mut mu: Vec<f64> = (0..n)
        .map(|i| {
            let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
            for (j, other) in distinct.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = squared_euclidean(distinct[i], other);
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                } else if d < d2 {
                    d2 = d;
                }
            }
            (d2 / d1).sqrt()
        })
        .collect();
    mu.sort_by(f64::total_cmp);

    let kept = ((n as f64) * (1.0 - discard_fraction)).floor().max(1.0) as usize;
    let threshold = mu[kept - 1].ln();
    let log_sum: f64 = mu[..kept].iter().map(|m| m.ln()).sum::<f64>() + (n - kept) as f64 * threshold;
    if log_sum <= 0.0 {
        return Err(TwoNnError::Degenerate);
    }
    Ok(TwoNnResult {
        id_estimate: kept as f64 / log_sum,
        n_points_used: n,
        n_discarded_duplicates: rows.len() - n,
        discard_fraction,
    })
}
