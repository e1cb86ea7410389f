//! Discriminative pattern mining for crash triage.
//!
//! Finds statistically significant, large, interpretable differences
//! ("contrast sets") between groups of crash reports:
//!
//! - `stucco`: categorical contrast set mining via level-wise tree search
//! - `ccsm`: continuous contrast set mining directly on real-valued features
//!   (no discretization), including TF-IDF n-gram features from navigation logs
//! - `ranking`: unified Cohen's d / Cohen's h anomaly scores, magnitude
//!   labels, confidence intervals, and report rendering
//! - `dataset`: columnar data model, CSV/JSONL ingestion, stratified
//!   sampling, equi-width discretization baseline, synthetic generation
//! - `stats`: the hypothesis-test / effect-size / interval kernel
//!
//! The `parallel` feature (default) runs per-level candidate evaluation on
//! rayon; without it everything is sequential.

pub mod ccsm;
pub mod cli;
pub mod dataset;
pub mod exec;
pub mod navfeat;
pub mod ranking;
pub mod stats;
pub mod stucco;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no rows in input")]
    NoRows,
    #[error("row {0}: missing group label")]
    MissingGroupLabel(usize),
    #[error("unknown column in schema: {0}")]
    UnknownColumn(String),
    #[error("group column {0:?} not found")]
    GroupColumnNotFound(String),
    #[error("contrast mining requires >= 2 groups")]
    TooFewGroups,
    #[error("no categorical columns")]
    NoCategoricalColumns,
    #[error("no candidate features")]
    NoCandidateFeatures,
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("no nav_log field in input")]
    NoNavLogs,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
