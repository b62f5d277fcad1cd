//! Gridded spatio-temporal data model.
//!
//! A [`SpatioTemporalTensor`] is an `M x N x T x d` field stored in
//! `(lat, lon, time, feature)` row-major order, with missing cells encoded
//! as NaN across all features. Gaps are axis-aligned boxes of missing
//! cells ([`StGap`]); each gap splits into unit-footprint strands
//! ([`UnitStrand`]) which are the atomic prediction target. Around a strand
//! we cut square patches for a few time steps before and after the gap
//! ([`PatchSequence`]).

mod block;
mod gap;
mod patch;
pub mod stgf;
mod tensor;

pub use block::GapBlock;
pub use gap::{decompose, find_gaps, GapId, StGap, UnitStrand};
pub use patch::{extract_patches, CellFlag, Patch, PatchSequence, TrainingPair};
pub use tensor::{rescale, SpatioTemporalTensor};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("invalid dimensions {m}x{n}x{t_len}x{d}: every axis must be at least 1")]
    InvalidDims {
        m: usize,
        n: usize,
        t_len: usize,
        d: usize,
    },
    #[error("value buffer holds {got} values, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cell (lat {lat}, lon {lon}, t {t}) is only partially missing")]
    PartialMissing { lat: usize, lon: usize, t: usize },
    #[error("missing cells around (lat {lat}, lon {lon}, t {t}) do not form an axis-aligned box")]
    IrregularMissingness { lat: usize, lon: usize, t: usize },
    #[error("invalid gap: {0}")]
    InvalidGap(String),
    #[error("patch side must be odd and positive, got {0}")]
    EvenPatch(usize),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("strand at (lat {lat}, lon {lon}) has no valid past or future patch")]
    NoContext { lat: usize, lon: usize },
    #[error("rescale factor must be non-zero")]
    ZeroFactor,
    #[error("target contains missing values")]
    MissingTarget,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),
    #[error("file truncated")]
    TruncatedFile,
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` wrapper so [`GridError`] can stay `PartialEq`.
#[derive(Debug, Error)]
#[error(transparent)]
pub struct IoError(#[from] pub std::io::Error);

impl PartialEq for IoError {
    fn eq(&self, other: &Self) -> bool {
        self.0.kind() == other.0.kind()
    }
}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            GridError::TruncatedFile
        } else {
            GridError::Io(IoError(e))
        }
    }
}
