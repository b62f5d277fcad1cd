//! Deep Geospatial Interpolation Network.
//!
//! Per strand the network runs
//!
//! ```text
//! patches --spatial encoder--> EP/EF --GRU enc/dec (past, future)--> PEZ_t, FEZ_t
//!         --attention (softmax over two scores)--> Z_t --output head--> y_t
//! ```
//!
//! Past and future branches have separate weights. The future branch reads
//! its patches nearest-to-gap last and its decoder output is re-aligned to
//! gap time. When one branch has no valid patch, attention is skipped and
//! the surviving branch feeds the head directly.

mod check;
pub mod checkpoint;
mod forward;
mod hyper;
mod params;

pub use check::check_strand_gradient;
pub use forward::{AttentionTrace, BranchKind, StrandOutput};
pub use hyper::DginHyperparams;
pub use params::{Branch, DginParameters, Normalizer, TRAINABLE_BLOCKS};

use thiserror::Error;

use crate::grid::GridError;
use crate::ndiff::NdiffError;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("branch has no valid patch to encode")]
    EmptyContext,
    #[error("{} strand(s) have neither past nor future context, first at {:?}", .failed.len(), .failed.first())]
    NoContext { failed: Vec<(usize, usize)> },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionUnsupported(u32),
    #[error("checkpoint truncated")]
    TruncatedFile,
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Ndiff(#[from] NdiffError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl From<std::io::Error> for ModelError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            ModelError::TruncatedFile
        } else {
            ModelError::Io(e.to_string())
        }
    }
}
