use super::{Gradients, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    pub tolerance: f64,
    /// Lower bound on the relative-error denominator, so gradients that are
    /// zero up to rounding are compared absolutely.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub index: usize,
    pub max_rel_error: f64,
    /// `(analytic, numeric)` at the worst entry.
    pub worst: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares `analytic` with central differences of `loss` around `params`.
///
/// Error per entry is `|a - n| / max(|a|, |n|, floor)`.
pub fn grad_check<F>(params: &[Tensor2], analytic: &Gradients, loss: F, config: GradCheckConfig) -> GradCheckReport
where
    F: Fn(&[Tensor2]) -> f64,
{
    assert_eq!(params.len(), analytic.blocks.len(), "one gradient block per parameter block");
    let mut work = params.to_vec();
    let mut blocks = Vec::with_capacity(params.len());
    for (index, block) in params.iter().enumerate() {
        let mut check = BlockCheck {
            index,
            max_rel_error: 0.0,
            worst: (0.0, 0.0),
        };
        for i in 0..block.len() {
            let orig = block.data()[i];
            work[index].data_mut()[i] = orig + config.step;
            let up = loss(&work);
            work[index].data_mut()[i] = orig - config.step;
            let down = loss(&work);
            work[index].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * config.step);
            let a = analytic.blocks[index].data()[i];
            let denom = a.abs().max(numeric.abs()).max(config.floor);
            let err = (a - numeric).abs() / denom;
            if err > check.max_rel_error || err.is_nan() {
                check.max_rel_error = err;
                check.worst = (a, numeric);
            }
        }
        blocks.push(check);
    }
    let max_rel_error = blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max);
    GradCheckReport {
        passed: max_rel_error < config.tolerance && max_rel_error.is_finite(),
        blocks,
        max_rel_error,
        tolerance: config.tolerance,
    }
}
