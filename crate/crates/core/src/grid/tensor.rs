use super::GridError;

/// Dense `M x N x T x d` field of 32-bit values, NaN-coded missingness.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatioTemporalTensor {
    m: usize,
    n: usize,
    t_len: usize,
    d: usize,
    values: Vec<f32>,
}

impl SpatioTemporalTensor {
    /// Builds a tensor, rejecting bad dimensions and partially-missing cells.
    pub fn new(
        m: usize,
        n: usize,
        t_len: usize,
        d: usize,
        values: Vec<f32>,
    ) -> Result<Self, GridError> {
        if m == 0 || n == 0 || t_len == 0 || d == 0 {
            return Err(GridError::InvalidDims { m, n, t_len, d });
        }
        let expected = m * n * t_len * d;
        if values.len() != expected {
            return Err(GridError::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        let tensor = Self {
            m,
            n,
            t_len,
            d,
            values,
        };
        if d > 1 {
            for (cell, chunk) in tensor.values.chunks_exact(d).enumerate() {
                let nan = chunk.iter().filter(|v| v.is_nan()).count();
                if nan != 0 && nan != d {
                    let (lat, lon, t) = tensor.unflatten(cell);
                    return Err(GridError::PartialMissing { lat, lon, t });
                }
            }
        }
        Ok(tensor)
    }

    /// A tensor with every value set to `fill`.
    pub fn filled(m: usize, n: usize, t_len: usize, d: usize, fill: f32) -> Result<Self, GridError> {
        Self::new(m, n, t_len, d, vec![fill; m * n * t_len * d])
    }

    pub fn from_fn(
        m: usize,
        n: usize,
        t_len: usize,
        d: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f32,
    ) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(m * n * t_len * d);
        for lat in 0..m {
            for lon in 0..n {
                for t in 0..t_len {
                    for k in 0..d {
                        values.push(f(lat, lon, t, k));
                    }
                }
            }
        }
        Self::new(m, n, t_len, d, values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.m, self.n, self.t_len, self.d)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    /// Offset of the first feature of cell `(lat, lon, t)`.
    #[inline]
    pub fn offset(&self, lat: usize, lon: usize, t: usize) -> usize {
        ((lat * self.n + lon) * self.t_len + t) * self.d
    }

    fn unflatten(&self, cell: usize) -> (usize, usize, usize) {
        let t = cell % self.t_len;
        let rest = cell / self.t_len;
        (rest / self.n, rest % self.n, t)
    }

    /// Feature vector of one cell.
    #[inline]
    pub fn cell(&self, lat: usize, lon: usize, t: usize) -> &[f32] {
        let o = self.offset(lat, lon, t);
        &self.values[o..o + self.d]
    }

    #[inline]
    pub fn get(&self, lat: usize, lon: usize, t: usize, k: usize) -> f32 {
        self.values[self.offset(lat, lon, t) + k]
    }

    #[inline]
    pub fn is_missing(&self, lat: usize, lon: usize, t: usize) -> bool {
        self.values[self.offset(lat, lon, t)].is_nan()
    }

    /// Overwrites one cell. Writing a partially-NaN vector is a logic error.
    pub fn set_cell(&mut self, lat: usize, lon: usize, t: usize, cell: &[f32]) {
        assert_eq!(cell.len(), self.d, "cell width");
        debug_assert!({
            let nan = cell.iter().filter(|v| v.is_nan()).count();
            nan == 0 || nan == self.d
        });
        let o = self.offset(lat, lon, t);
        self.values[o..o + self.d].copy_from_slice(cell);
    }

    pub fn set_missing(&mut self, lat: usize, lon: usize, t: usize) {
        let o = self.offset(lat, lon, t);
        self.values[o..o + self.d].fill(f32::NAN);
    }

    pub fn missing_count(&self) -> usize {
        self.values.chunks_exact(self.d).filter(|c| c[0].is_nan()).count()
    }

    /// Bitwise equality, treating NaN payloads as plain bits.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.dims() == other.dims()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Multiplies every observed value by `factor`; NaNs stay NaN.
pub fn rescale(tensor: &SpatioTemporalTensor, factor: f32) -> Result<SpatioTemporalTensor, GridError> {
    if factor == 0.0 {
        return Err(GridError::ZeroFactor);
    }
    let mut out = tensor.clone();
    for v in out.values.iter_mut().filter(|v| !v.is_nan()) {
        *v *= factor;
    }
    Ok(out)
}
