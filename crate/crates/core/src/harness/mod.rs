//! Experiment drivers and their reports: the (b, q) identifiability grid,
//! random-function nonlinearity curves, the three-node thresholding study,
//! consistency-in-n curves and cause-effect pair evaluation.

mod experiments;
mod io;
mod pairs;
mod report;

pub use experiments::{
    full_three_node, run_bq_grid, run_consistency_curve, run_nonlinearity_curve, run_three_node, GeneratorSpec,
    GridCell, GridResult, NonlinearityCell, NonlinearityCurve,
};
pub use io::{load_dataset, LoadedDataset};
pub use pairs::{eval_pairs, load_pairs_corpus, write_synthetic_pairs, Direction, PairEntry, PairsCorpus, SkippedPair};
pub use report::{Aggregate, ExperimentReport, GroupSummary, TrialRecord};

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::search::SearchError;
use crate::simgen::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("experiment has no trials")]
    EmptyExperiment,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{context}: {source}")]
    Sim { context: String, source: SimError },
    #[error("{context}: {source}")]
    Search { context: String, source: SearchError },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}, line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{0}: no data rows")]
    EmptyFile(String),
    #[error("metadata file not found: {0}")]
    MissingMetadata(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
