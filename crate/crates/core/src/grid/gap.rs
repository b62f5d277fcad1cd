use super::{GridError, SpatioTemporalTensor};

/// Identifier of a gap within a tensor or gap plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GapId(pub usize);

/// An axis-aligned `k1 x k2 x delta_t` box of missing cells.
///
/// `alpha` and `beta` are the first and last missing time index, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StGap {
    pub lat_start: usize,
    pub lon_start: usize,
    pub k1: usize,
    pub k2: usize,
    pub alpha: usize,
    pub beta: usize,
}

impl StGap {
    pub fn new(
        lat_start: usize,
        lon_start: usize,
        k1: usize,
        k2: usize,
        alpha: usize,
        delta_t: usize,
    ) -> Result<Self, GridError> {
        if k1 == 0 || k2 == 0 || delta_t == 0 {
            return Err(GridError::InvalidGap(format!(
                "extent {k1}x{k2}x{delta_t} must be positive"
            )));
        }
        Ok(Self {
            lat_start,
            lon_start,
            k1,
            k2,
            alpha,
            beta: alpha + delta_t - 1,
        })
    }

    pub fn delta_t(&self) -> usize {
        self.beta - self.alpha + 1
    }

    pub fn cell_count(&self) -> usize {
        self.k1 * self.k2 * self.delta_t()
    }

    pub fn contains(&self, lat: usize, lon: usize, t: usize) -> bool {
        (self.lat_start..self.lat_start + self.k1).contains(&lat)
            && (self.lon_start..self.lon_start + self.k2).contains(&lon)
            && (self.alpha..=self.beta).contains(&t)
    }

    pub fn intersects(&self, other: &StGap) -> bool {
        fn overlap(a0: usize, a1: usize, b0: usize, b1: usize) -> bool {
            a0 < b1 && b0 < a1
        }
        overlap(self.lat_start, self.lat_start + self.k1, other.lat_start, other.lat_start + other.k1)
            && overlap(self.lon_start, self.lon_start + self.k2, other.lon_start, other.lon_start + other.k2)
            && overlap(self.alpha, self.beta + 1, other.alpha, other.beta + 1)
    }

    /// True when the boxes overlap or share a face, edge or corner.
    pub fn touches(&self, other: &StGap) -> bool {
        fn near(a0: usize, a1: usize, b0: usize, b1: usize) -> bool {
            a0 <= b1 && b0 <= a1
        }
        near(self.lat_start, self.lat_start + self.k1, other.lat_start, other.lat_start + other.k1)
            && near(self.lon_start, self.lon_start + self.k2, other.lon_start, other.lon_start + other.k2)
            && near(self.alpha, self.beta + 1, other.alpha, other.beta + 1)
    }

    pub fn fits(&self, tensor: &SpatioTemporalTensor) -> bool {
        self.lat_start + self.k1 <= tensor.m()
            && self.lon_start + self.k2 <= tensor.n()
            && self.beta < tensor.t_len()
    }
}

/// A unit-footprint slice of a gap spanning its full time extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitStrand {
    pub lat: usize,
    pub lon: usize,
    pub alpha: usize,
    pub beta: usize,
    pub parent: GapId,
}

impl UnitStrand {
    pub fn delta_t(&self) -> usize {
        self.beta - self.alpha + 1
    }
}

/// Splits a gap into its `k1 * k2` strands, row-major.
pub fn decompose(gap: &StGap, parent: GapId) -> Vec<UnitStrand> {
    let mut out = Vec::with_capacity(gap.k1 * gap.k2);
    for lat in gap.lat_start..gap.lat_start + gap.k1 {
        for lon in gap.lon_start..gap.lon_start + gap.k2 {
            out.push(UnitStrand {
                lat,
                lon,
                alpha: gap.alpha,
                beta: gap.beta,
                parent,
            });
        }
    }
    out
}

/// Finds every missing box in the tensor.
///
/// Missing cells are grouped into face-connected components over
/// `(lat, lon, time)`; each component must fill its bounding box exactly,
/// otherwise the missingness is not box-tileable and the call fails.
/// Gaps are returned in the scan order of their first cell.
pub fn find_gaps(tensor: &SpatioTemporalTensor) -> Result<Vec<StGap>, GridError> {
    let (m, n, t_len, _) = tensor.dims();
    let idx = |lat: usize, lon: usize, t: usize| (lat * n + lon) * t_len + t;
    let mut seen = vec![false; m * n * t_len];
    let mut gaps = Vec::new();
    let mut stack = Vec::new();

    for lat in 0..m {
        for lon in 0..n {
            for t in 0..t_len {
                if seen[idx(lat, lon, t)] || !tensor.is_missing(lat, lon, t) {
                    continue;
                }
                seen[idx(lat, lon, t)] = true;
                stack.push((lat, lon, t));
                let (mut lo, mut hi) = ([lat, lon, t], [lat, lon, t]);
                let mut count = 0usize;
                while let Some((a, b, c)) = stack.pop() {
                    count += 1;
                    let p = [a, b, c];
                    for axis in 0..3 {
                        lo[axis] = lo[axis].min(p[axis]);
                        hi[axis] = hi[axis].max(p[axis]);
                    }
                    let mut visit = |a: usize, b: usize, c: usize| {
                        let i = idx(a, b, c);
                        if !seen[i] && tensor.is_missing(a, b, c) {
                            seen[i] = true;
                            stack.push((a, b, c));
                        }
                    };
                    if a > 0 {
                        visit(a - 1, b, c);
                    }
                    if a + 1 < m {
                        visit(a + 1, b, c);
                    }
                    if b > 0 {
                        visit(a, b - 1, c);
                    }
                    if b + 1 < n {
                        visit(a, b + 1, c);
                    }
                    if c > 0 {
                        visit(a, b, c - 1);
                    }
                    if c + 1 < t_len {
                        visit(a, b, c + 1);
                    }
                }
                let volume = (hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1);
                if volume != count {
                    return Err(GridError::IrregularMissingness { lat, lon, t });
                }
                gaps.push(StGap {
                    lat_start: lo[0],
                    lon_start: lo[1],
                    k1: hi[0] - lo[0] + 1,
                    k2: hi[1] - lo[1] + 1,
                    alpha: lo[2],
                    beta: hi[2],
                });
            }
        }
    }
    Ok(gaps)
}
