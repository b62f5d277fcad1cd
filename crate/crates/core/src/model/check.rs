use super::{DginHyperparams, DginParameters, ModelError};
use crate::grid::{GapId, SpatioTemporalTensor, TrainingPair, UnitStrand};
use crate::ndiff::{grad_check, GradCheckConfig, GradCheckReport, SplitMix64, Tensor2};

/// Finite-difference check of the full strand loss for one random model.
///
/// Weights come from `init(seed)` with random biases; the field is a smooth
/// wave plus noise and the strand sits in the middle of it with `delta_t`
/// missing steps and `h` observed steps on each side.
pub fn check_strand_gradient(
    hyper: DginHyperparams,
    delta_t: usize,
    seed: u64,
    config: GradCheckConfig,
) -> Result<GradCheckReport, ModelError> {
    if delta_t == 0 {
        return Err(ModelError::Hyper("delta_t must be at least 1".into()));
    }
    let mut params = DginParameters::init(hyper, seed)?;
    let mut rng = SplitMix64::new(seed ^ 0x5EED);
    for b in params.blocks_mut() {
        if b.cols() == 1 {
            for v in b.data_mut() {
                *v = rng.symmetric(0.5);
            }
        }
    }
    let side = hyper.p + 4;
    let t_len = delta_t + 2 * hyper.h + 2;
    let truth = SpatioTemporalTensor::from_fn(side, side, t_len, hyper.d, |a, b, t, k| {
        ((a + b + k) as f64 * 0.1 + (t as f64 * 0.4).sin() + rng.symmetric(0.2)) as f32
    })?;
    let mut masked = truth.clone();
    let (c, alpha) = (side / 2, hyper.h + 1);
    for t in alpha..alpha + delta_t {
        masked.set_missing(c, c, t);
    }
    let strand = UnitStrand {
        lat: c,
        lon: c,
        alpha,
        beta: alpha + delta_t - 1,
        parent: GapId(0),
    };
    let pair = TrainingPair::from_truth(&masked, &truth, &strand, hyper.p, hyper.h)?;
    let (_, grads) = params.strand_loss(&pair)?;
    let blocks: Vec<Tensor2> = params.blocks().into_iter().cloned().collect();
    let norm = params.norm.clone();
    Ok(grad_check(
        &blocks,
        &grads,
        |b| {
            DginParameters::from_blocks(hyper, b.to_vec(), norm.clone())
                .and_then(|p| p.strand_loss_value(&pair))
                .unwrap_or(f64::NAN)
        },
        config,
    ))
}
