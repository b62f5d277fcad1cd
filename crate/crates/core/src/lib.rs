//! Spatio-temporal gap filling.
//!
//! - [`grid`]: tensor data model, gap detection, strand and patch extraction, STGF files.
//! - [`ndiff`]: reverse-mode kernel (dense, GRU, softmax, MSE, Adam, gradient check).
//! - [`model`]: the DGIN network (spatial encoder, past/future GRU branches,
//!   attention fusion, output head) and DGC1 checkpoints.
//! - [`baselines`]: nearest-history mean, inverse distance weighting, ordinary kriging.
//! - [`synth`]: synthetic fields with controlled variance and gap injection.
//! - [`harness`]: training loop, evaluation, paired t-test and timing.

pub mod baselines;
pub mod grid;
pub mod harness;
pub mod model;
pub mod ndiff;
pub mod synth;

pub use ndiff::SplitMix64;
