//! Synthetic fields and gap plans.

mod field;
mod plan;

pub use field::{box_smooth, generate, mean_temporal_variance, FieldSpec, Regime};
pub use plan::{
    classify_gap_variance, gap_variance, inject_gaps, label_plan, median, random_plan, GapClass, GapPlan,
    PlacementRules, PlannedGap,
};

use thiserror::Error;

use crate::grid::GridError;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),
    #[error("gaps {a} and {b} overlap")]
    OverlappingGaps { a: usize, b: usize },
    #[error("gap {id} lies outside the tensor")]
    OutOfBounds { id: usize },
    #[error("gap {id} covers cells that are already missing")]
    AlreadyMissing { id: usize },
    #[error("duplicate gap id {0}")]
    DuplicateId(usize),
    #[error("placed {placed} of {requested} gaps before running out of attempts")]
    PlacementFailed { placed: usize, requested: usize },
    #[error("gap plan line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl From<std::io::Error> for SynthError {
    fn from(e: std::io::Error) -> Self {
        SynthError::Io(e.to_string())
    }
}
