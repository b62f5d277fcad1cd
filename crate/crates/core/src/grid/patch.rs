use super::{GridError, SpatioTemporalTensor, UnitStrand};

/// Provenance of one spatial cell inside a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    Observed,
    /// Outside the grid; values are zero.
    Padded,
    /// Missing in the tensor (another gap); values are the patch mean.
    Imputed,
}

/// A `p x p x d` neighbourhood at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// Time index; may lie outside `0..T` for invalid patches.
    pub t: i64,
    pub valid: bool,
    /// `(row, col, feature)` row-major.
    pub values: Vec<f64>,
    /// One flag per `(row, col)`.
    pub flags: Vec<CellFlag>,
}

impl Patch {
    fn invalid(t: i64, p: usize, d: usize) -> Self {
        Self {
            t,
            valid: false,
            values: vec![0.0; p * p * d],
            flags: vec![CellFlag::Padded; p * p],
        }
    }
}

/// Past and future patches around one strand.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSequence {
    pub strand: UnitStrand,
    pub p: usize,
    pub h: usize,
    pub d: usize,
    /// Times `alpha - h ..= alpha - 1`, increasing.
    pub past: Vec<Patch>,
    /// Times `beta + 1 ..= beta + h`, increasing.
    pub future: Vec<Patch>,
}

impl PatchSequence {
    pub fn valid_past(&self) -> impl DoubleEndedIterator<Item = &Patch> {
        self.past.iter().filter(|p| p.valid)
    }

    pub fn valid_future(&self) -> impl DoubleEndedIterator<Item = &Patch> {
        self.future.iter().filter(|p| p.valid)
    }

    pub fn has_past(&self) -> bool {
        self.past.iter().any(|p| p.valid)
    }

    pub fn has_future(&self) -> bool {
        self.future.iter().any(|p| p.valid)
    }

    /// Marks every future patch invalid, leaving a history-only input.
    pub fn without_future(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.future {
            f.valid = false;
        }
        out
    }

    pub fn delta_t(&self) -> usize {
        self.strand.delta_t()
    }
}

/// Cuts `h` past and `h` future patches of side `p` around a strand.
///
/// Cells beyond the grid edge are zero and flagged [`CellFlag::Padded`];
/// missing cells are replaced by the per-feature mean of the patch's
/// observed cells and flagged [`CellFlag::Imputed`]. A patch whose time
/// falls outside the tensor, or which has no observed cell, is invalid.
pub fn extract_patches(
    tensor: &SpatioTemporalTensor,
    strand: &UnitStrand,
    p: usize,
    h: usize,
) -> Result<PatchSequence, GridError> {
    if p.is_multiple_of(2) {
        return Err(GridError::EvenPatch(p));
    }
    if h == 0 {
        return Err(GridError::ZeroHorizon);
    }
    let d = tensor.d();
    let past = (1..=h)
        .rev()
        .map(|k| cut(tensor, strand, strand.alpha as i64 - k as i64, p))
        .collect();
    let future = (1..=h)
        .map(|k| cut(tensor, strand, (strand.beta + k) as i64, p))
        .collect();
    let seq = PatchSequence {
        strand: *strand,
        p,
        h,
        d,
        past,
        future,
    };
    if !seq.has_past() && !seq.has_future() {
        return Err(GridError::NoContext {
            lat: strand.lat,
            lon: strand.lon,
        });
    }
    Ok(seq)
}

fn cut(tensor: &SpatioTemporalTensor, strand: &UnitStrand, t: i64, p: usize) -> Patch {
    let d = tensor.d();
    if t < 0 || t >= tensor.t_len() as i64 {
        return Patch::invalid(t, p, d);
    }
    let tu = t as usize;
    let half = (p / 2) as i64;
    let mut values = vec![0.0; p * p * d];
    let mut flags = vec![CellFlag::Padded; p * p];
    let mut sums = vec![0.0; d];
    let mut observed = 0usize;

    for r in 0..p {
        let lat = strand.lat as i64 + r as i64 - half;
        for c in 0..p {
            let lon = strand.lon as i64 + c as i64 - half;
            if lat < 0 || lon < 0 || lat >= tensor.m() as i64 || lon >= tensor.n() as i64 {
                continue;
            }
            let cell = tensor.cell(lat as usize, lon as usize, tu);
            let slot = r * p + c;
            if cell[0].is_nan() {
                flags[slot] = CellFlag::Imputed;
                continue;
            }
            flags[slot] = CellFlag::Observed;
            observed += 1;
            for (k, &v) in cell.iter().enumerate() {
                values[slot * d + k] = v as f64;
                sums[k] += v as f64;
            }
        }
    }
    if observed == 0 {
        return Patch::invalid(t, p, d);
    }
    for s in &mut sums {
        *s /= observed as f64;
    }
    for (slot, flag) in flags.iter().enumerate() {
        if *flag == CellFlag::Imputed {
            values[slot * d..(slot + 1) * d].copy_from_slice(&sums);
        }
    }
    Patch {
        t,
        valid: true,
        values,
        flags,
    }
}

/// Patch input plus the true strand values, `delta_t x d` time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: PatchSequence,
    pub target: Vec<f64>,
}

impl TrainingPair {
    pub fn new(input: PatchSequence, target: Vec<f64>) -> Result<Self, GridError> {
        let expected = input.delta_t() * input.d;
        if target.len() != expected {
            return Err(GridError::LengthMismatch {
                expected,
                got: target.len(),
            });
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(GridError::MissingTarget);
        }
        Ok(Self { input, target })
    }

    /// Builds a pair from a masked tensor and its ground truth.
    pub fn from_truth(
        masked: &SpatioTemporalTensor,
        truth: &SpatioTemporalTensor,
        strand: &UnitStrand,
        p: usize,
        h: usize,
    ) -> Result<Self, GridError> {
        let input = extract_patches(masked, strand, p, h)?;
        let target = (strand.alpha..=strand.beta)
            .flat_map(|t| truth.cell(strand.lat, strand.lon, t).iter().map(|&v| v as f64))
            .collect();
        Self::new(input, target)
    }
}
