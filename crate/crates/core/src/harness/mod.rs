//! Training, evaluation, significance testing and timing.

mod data;
mod eval;
mod experiment;
mod stats;
mod train;

pub use data::{generate_splits, split_seeds, GapSpec, GenerateSpec, Split, SPLIT_NAMES};
pub use eval::{
    bench, bench_table, evaluate, BenchRow, DginFiller, EvalReport, GapFiller, GapOutcome, IdwFiller, KrigingFiller,
    MeanFiller, MethodResult, OracleFiller, PairTest,
};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentRun};
pub use stats::{paired_t_test, t_two_sided_p, Degenerate, TTest};
pub use train::{fit_normalizer, mean_loss, train, train_from, EpochStats, TrainConfig, TrainOutcome};

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::grid::GridError;
use crate::model::ModelError;
use crate::ndiff::NdiffError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least 2 paired samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("no ground truth for gap {0}")]
    MissingTruth(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ndiff(#[from] NdiffError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}
