use super::BaselineError;
use crate::grid::{decompose, GapBlock, GapId, SpatioTemporalTensor, StGap, UnitStrand};

/// Per-feature mean of the `k` most recent observed values before the
/// strand, repeated over every gap step.
pub fn mean_baseline(tensor: &SpatioTemporalTensor, strand: &UnitStrand, k: usize) -> Result<Vec<f64>, BaselineError> {
    if k == 0 {
        return Err(BaselineError::Config("history count must be at least 1".into()));
    }
    let d = tensor.d();
    let mut sums = vec![0.0; d];
    let mut found = 0usize;
    for t in (0..strand.alpha).rev() {
        if found == k {
            break;
        }
        if tensor.is_missing(strand.lat, strand.lon, t) {
            continue;
        }
        for (s, v) in sums.iter_mut().zip(tensor.cell(strand.lat, strand.lon, t)) {
            *s += *v as f64;
        }
        found += 1;
    }
    if found == 0 {
        return Err(BaselineError::NoHistory {
            lat: strand.lat,
            lon: strand.lon,
        });
    }
    let means: Vec<f64> = sums.iter().map(|s| s / found as f64).collect();
    Ok(means.iter().copied().cycle().take(strand.delta_t() * d).collect())
}

pub fn mean_gap(tensor: &SpatioTemporalTensor, gap: &StGap, k: usize) -> Result<GapBlock, BaselineError> {
    let mut block = GapBlock::zeros(*gap, tensor.d());
    for s in decompose(gap, GapId(0)) {
        let values = mean_baseline(tensor, &s, k)?;
        block
            .strand_mut(s.lat - gap.lat_start, s.lon - gap.lon_start)
            .copy_from_slice(&values);
    }
    Ok(block)
}
