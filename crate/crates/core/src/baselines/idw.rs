use super::{distance, gap_cells, BaselineError, ContextWindow, SamplePoint};
use crate::grid::{GapBlock, SpatioTemporalTensor, StGap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdwConfig {
    pub power: f64,
    pub time_scale: f64,
    pub window: ContextWindow,
}

impl Default for IdwConfig {
    fn default() -> Self {
        Self {
            power: 2.0,
            time_scale: 1.0,
            window: ContextWindow {
                radius: 3,
                before: 2,
                after: 0,
            },
        }
    }
}

/// Inverse distance weighting, `sum(w v) / sum(w)` with `w = dist^-power`.
/// A sample at distance zero is returned as is.
pub fn idw(samples: &[SamplePoint], query: [f64; 3], power: f64, time_scale: f64) -> Result<f64, BaselineError> {
    if samples.is_empty() {
        return Err(BaselineError::EmptySamples);
    }
    if power.is_nan() || power <= 0.0 {
        return Err(BaselineError::Config(format!("power must be positive, got {power}")));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in samples {
        let dist = distance(&s.position, &query, time_scale);
        if dist == 0.0 {
            return Ok(s.value);
        }
        let w = dist.powf(-power);
        num += w * s.value;
        den += w;
    }
    Ok(num / den)
}

pub fn idw_gap(tensor: &SpatioTemporalTensor, gap: &StGap, config: &IdwConfig) -> Result<GapBlock, BaselineError> {
    let mut block = GapBlock::zeros(*gap, tensor.d());
    for k in 0..tensor.d() {
        let samples = config.window.samples(tensor, gap, k);
        if samples.is_empty() {
            return Err(BaselineError::NoContext);
        }
        for (dl, dn, dt) in gap_cells(gap) {
            let q = [
                (gap.lat_start + dl) as f64,
                (gap.lon_start + dn) as f64,
                (gap.alpha + dt) as f64,
            ];
            let o = block.offset(dl, dn, dt);
            block.values[o + k] = idw(&samples, q, config.power, config.time_scale)?;
        }
    }
    Ok(block)
}
