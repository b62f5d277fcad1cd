use std::path::PathBuf;

use rayon::prelude::*;

use super::HarnessError;
use crate::grid::TrainingPair;
use crate::model::{checkpoint, DginHyperparams, DginParameters, Normalizer};
use crate::ndiff::{AdamState, Gradients, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    /// Strands per optimizer step.
    pub batch: usize,
    pub epochs: usize,
    /// Drives both initialization and shuffling.
    pub seed: u64,
    pub hyper: DginHyperparams,
    /// Written every `eval_every` epochs and at the end when set.
    pub checkpoint: Option<PathBuf>,
    /// Validation loss (and checkpoint) cadence in epochs; 0 turns it off.
    pub eval_every: usize,
    /// Return the parameters of the evaluated epoch with the lowest
    /// validation loss instead of the last epoch's.
    pub keep_best: bool,
}

impl TrainConfig {
    pub fn new(hyper: DginHyperparams) -> Self {
        Self {
            lr: 1e-4,
            batch: 128,
            epochs: 200,
            seed: 0,
            hyper,
            checkpoint: None,
            eval_every: 0,
            keep_best: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HarnessError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch == 0 {
            return Err(HarnessError::Config("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(HarnessError::Config("epochs must be at least 1".into()));
        }
        self.hyper.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean strand loss over the epoch, measured before each batch's update.
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: DginParameters,
    pub history: Vec<EpochStats>,
    pub steps: u64,
    /// Epoch whose parameters were returned.
    pub selected_epoch: usize,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|e| e.train_loss).collect()
    }
}

/// Normalizer fitted on every target value of the dataset.
pub fn fit_normalizer(d: usize, dataset: &[TrainingPair]) -> Normalizer {
    Normalizer::fit(d, dataset.iter().flat_map(|p| p.target.iter().copied()))
}

/// Fresh initialization from `config.seed`, normalizer fitted on the targets.
pub fn train(
    dataset: &[TrainingPair],
    validation: &[TrainingPair],
    config: &TrainConfig,
) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    let params = DginParameters::init(config.hyper, config.seed)?.with_norm(fit_normalizer(config.hyper.d, dataset))?;
    train_from(params, dataset, validation, config)
}

/// Continues from `params` (normalizer kept as is).
pub fn train_from(
    mut params: DginParameters,
    dataset: &[TrainingPair],
    validation: &[TrainingPair],
    config: &TrainConfig,
) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    if *params.hyper() != config.hyper {
        return Err(HarnessError::Config("parameters do not match the configured hyperparameters".into()));
    }
    let mut rng = SplitMix64::new(config.seed).split();
    let mut adam = AdamState::new(config.lr, params.blocks());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, DginParameters)> = None;

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch) {
            let (loss, grads) = batch_gradient(&params, dataset, batch)?;
            if !loss.is_finite() || !grads.max_abs().is_finite() {
                return Err(HarnessError::NonFinite(format!("loss at epoch {epoch}")));
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(&mut params.blocks_mut(), &grads)?;
        }
        let train_loss = epoch_loss / dataset.len() as f64;
        let due = config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs);
        let validation_loss = if due && !validation.is_empty() {
            Some(mean_loss(&params, validation)?)
        } else {
            None
        };
        if let (true, Some(v)) = (config.keep_best, validation_loss) {
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, epoch, params.clone()));
            }
        }
        if due {
            if let Some(path) = &config.checkpoint {
                let keep = best.as_ref().map_or(&params, |b| &b.2);
                checkpoint::save(keep, path)?;
            }
        }
        log::info!(
            "epoch {epoch}/{}: train {train_loss:.6}{}",
            config.epochs,
            validation_loss.map(|v| format!(", validation {v:.6}")).unwrap_or_default()
        );
        history.push(EpochStats {
            epoch,
            train_loss,
            validation_loss,
        });
    }
    let steps = adam.steps();
    let (params, selected_epoch) = match best {
        Some((_, epoch, p)) => (p, epoch),
        None => (params, config.epochs),
    };
    if let Some(path) = &config.checkpoint {
        checkpoint::save(&params, path)?;
    }
    Ok(TrainOutcome {
        params,
        history,
        steps,
        selected_epoch,
    })
}

/// Mean strand loss and its gradient over `batch`. Strands run in parallel;
/// the sum is taken in batch order so the result does not depend on
/// scheduling.
fn batch_gradient(
    params: &DginParameters,
    dataset: &[TrainingPair],
    batch: &[usize],
) -> Result<(f64, Gradients), HarnessError> {
    let parts: Vec<_> = batch.par_iter().map(|&i| params.strand_loss(&dataset[i])).collect();
    let mut grads = Gradients::zeros_like(params.blocks());
    let mut loss = 0.0;
    for part in parts {
        let (l, g) = part?;
        loss += l;
        grads.accumulate(&g);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    Ok((loss * inv, grads))
}

pub fn mean_loss(params: &DginParameters, pairs: &[TrainingPair]) -> Result<f64, HarnessError> {
    if pairs.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    let losses: Vec<_> = pairs.par_iter().map(|p| params.strand_loss_value(p)).collect();
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / pairs.len() as f64)
}
