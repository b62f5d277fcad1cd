//! Small reverse-mode differentiable kernel.
//!
//! Plain forward functions ([`DenseLayer::forward`], [`GruCell::step`],
//! [`softmax`], [`mse`]) run without recording anything. The same layers can
//! record onto a [`Tape`], whose [`Tape::backward`] returns a gradient for
//! every parameter block the tape was built over. [`AdamState`] applies
//! updates and [`grad_check`] compares tape gradients with central
//! differences.

mod adam;
mod gradcheck;
mod layers;
pub mod rng;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use gradcheck::{grad_check, BlockCheck, GradCheckConfig, GradCheckReport};
pub use layers::{glorot_bound, Activation, DenseLayer, GruCell};
pub use rng::SplitMix64;
pub use tape::{Gradients, ParamId, Tape, Var};
pub use tensor::Tensor2;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NdiffError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("empty input")]
    EmptyInput,
    #[error("loss node holds {0} values, expected a scalar")]
    NonScalarLoss(usize),
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax with max subtraction.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>, NdiffError> {
    if scores.is_empty() {
        return Err(NdiffError::EmptyInput);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(NdiffError::NonFinite);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Mean squared error.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64, NdiffError> {
    if pred.len() != target.len() {
        return Err(NdiffError::ShapeMismatch(format!(
            "prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(NdiffError::EmptyInput);
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}
