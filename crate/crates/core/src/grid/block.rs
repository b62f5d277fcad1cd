use super::{GridError, SpatioTemporalTensor, StGap};

/// Values for every cell of one gap, `(lat, lon, time, feature)` row-major
/// in gap-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GapBlock {
    pub gap: StGap,
    pub d: usize,
    pub values: Vec<f64>,
}

impl GapBlock {
    pub fn zeros(gap: StGap, d: usize) -> Self {
        Self {
            gap,
            d,
            values: vec![0.0; gap.cell_count() * d],
        }
    }

    /// Copies the gap's cells out of `tensor` (usually the ground truth).
    pub fn from_tensor(tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<Self, GridError> {
        if !gap.fits(tensor) {
            return Err(GridError::InvalidGap(format!("{gap:?} exceeds tensor bounds")));
        }
        let mut block = Self::zeros(*gap, tensor.d());
        for dl in 0..gap.k1 {
            for dn in 0..gap.k2 {
                for dt in 0..gap.delta_t() {
                    let cell = tensor.cell(gap.lat_start + dl, gap.lon_start + dn, gap.alpha + dt);
                    let o = block.offset(dl, dn, dt);
                    for (k, v) in cell.iter().enumerate() {
                        block.values[o + k] = *v as f64;
                    }
                }
            }
        }
        Ok(block)
    }

    #[inline]
    pub fn offset(&self, dlat: usize, dlon: usize, dt: usize) -> usize {
        ((dlat * self.gap.k2 + dlon) * self.gap.delta_t() + dt) * self.d
    }

    /// The `delta_t x d` series of one strand.
    pub fn strand(&self, dlat: usize, dlon: usize) -> &[f64] {
        let o = self.offset(dlat, dlon, 0);
        &self.values[o..o + self.gap.delta_t() * self.d]
    }

    pub fn strand_mut(&mut self, dlat: usize, dlon: usize) -> &mut [f64] {
        let o = self.offset(dlat, dlon, 0);
        let len = self.gap.delta_t() * self.d;
        &mut self.values[o..o + len]
    }

    /// Writes the block back into `tensor` as `f32`.
    pub fn write_into(&self, tensor: &mut SpatioTemporalTensor) {
        let mut cell = vec![0f32; self.d];
        for dl in 0..self.gap.k1 {
            for dn in 0..self.gap.k2 {
                for dt in 0..self.gap.delta_t() {
                    let o = self.offset(dl, dn, dt);
                    for k in 0..self.d {
                        cell[k] = self.values[o + k] as f32;
                    }
                    tensor.set_cell(self.gap.lat_start + dl, self.gap.lon_start + dn, self.gap.alpha + dt, &cell);
                }
            }
        }
    }

    /// Mean squared difference to another block over the same gap.
    pub fn mse(&self, other: &GapBlock) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "blocks of different gaps");
        let sum: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum();
        sum / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_and_write_back() {
        let x = SpatioTemporalTensor::from_fn(4, 4, 6, 2, |a, b, t, k| (a * 1000 + b * 100 + t * 10 + k) as f32)
            .unwrap();
        let gap = StGap::new(1, 2, 2, 1, 3, 2).unwrap();
        let block = GapBlock::from_tensor(&x, &gap).unwrap();
        assert_eq!(block.values.len(), 2 * 1 * 2 * 2);
        assert_eq!(block.strand(1, 0), &[2230.0, 2231.0, 2240.0, 2241.0]);

        let mut y = x.clone();
        y.set_missing(2, 2, 4);
        block.write_into(&mut y);
        assert!(y.bit_eq(&x));
        assert_eq!(block.mse(&block), 0.0);
    }
}
