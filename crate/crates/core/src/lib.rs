//! Simulation and analysis of multi-agent iterative qualitative coding.

pub mod backends;
pub mod cli;
pub mod engine;
pub mod geometry;
pub mod ingest;
pub mod lexmetrics;
pub mod primitives;
pub mod report;
pub mod store;
