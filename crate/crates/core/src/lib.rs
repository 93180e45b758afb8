//! Edge-sparsity stress testing for bipartite link prediction.
//!
//! The pipeline percolates a bipartite graph, splits it into leakage-free
//! train/val/test link sets, augments the training edges with one of several
//! policies, trains a shallow embedding scorer with class-balanced BCE and
//! reports AUC-ROC and Brier scores with paired t-tests across seeds.

pub mod augment;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod planted;
pub mod predictor;
pub mod report;
pub mod seed;
pub mod sparsify;
pub mod stats;

pub use augment::{Augmentation, NeighborLists, Policy, SemanticContext};
pub use error::{Error, Result};
pub use graph::{BipartiteGraph, DegreeTable, Edge, FeatureMatrix};
pub use harness::{ExperimentConfig, MetricRecord, RunRecord};
pub use metrics::EvalSet;
pub use predictor::{Scorer, TrainConfig, TrainedModel};
pub use sparsify::{LinkSplit, SplitConfig};
pub use stats::{StatRow, Stars};
