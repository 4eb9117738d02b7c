//! Causal structure discovery for additive noise models by penalized
//! nonparametric maximum likelihood.
//!
//! Each candidate DAG is scored by regressing every node on its parents
//! ([`smooth`]), estimating the residual densities ([`density`]) and summing
//! the mean residual log-densities minus a per-edge penalty ([`score`]).
//! [`search`] ranks DAGs exhaustively or greedily, [`simgen`] generates
//! synthetic additive-noise data and [`harness`] runs the benchmark
//! experiments.

pub mod cli;
pub mod dataset;
pub mod density;
pub mod graph;
pub mod harness;
pub mod par;
pub mod score;
pub mod search;
pub mod simgen;
pub mod smooth;

pub use dataset::Dataset;
pub use density::{BandwidthRule, DensityConfig, DensityKind, DensityModel};
pub use graph::{enumerate_dags, shd, Dag, DagId};
pub use score::{penalty, FamilyFit, PenaltyRule, Score, ScoreConfig, Scorer};
pub use search::{decide, exhaustive_search, greedy_search, Decision, Outcome, Ranking};
pub use simgen::{gen_cubic, gen_wiener_function, sample_anm, AnmSpec, EdgeFunction, NoiseSpec};
pub use smooth::{FittedSmoother, SmootherConfig};
