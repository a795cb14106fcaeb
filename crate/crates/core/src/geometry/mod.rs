//! Embedding-space analyses: intrinsic dimension, influence, opinion axis.

pub mod embed;
pub mod opinion;
pub mod pca;
pub mod series;
pub mod twonn;

pub use embed::{CacheFormat, CachedEmbedder, CodeEmbeddings};
pub use opinion::{
    min_max, opinion_confidence_grid, opinion_confidence_points, ConfidenceScaling, OpinionConfidencePoint, RoundGrid,
};
pub use pca::{opinion_axis, OpinionAxis, PcaError};
pub use series::{
    influence_matrices, mean_pairwise_cosine_series, per_model_id_series, pooled_id_series, InfluenceMatrix,
    POOLED_LABEL,
};
pub use twonn::{twonn_id, twonn_id_rows, TwoNnError, TwoNnResult, DEFAULT_DISCARD_FRACTION};
