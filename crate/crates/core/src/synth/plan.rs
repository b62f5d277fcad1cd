use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::SynthError;
use crate::grid::{GapBlock, SpatioTemporalTensor, StGap};
use crate::ndiff::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GapClass {
    High,
    Low,
    /// Not yet classified; as a report class it means every gap.
    Mixed,
}

impl GapClass {
    pub const ALL: [GapClass; 3] = [GapClass::High, GapClass::Low, GapClass::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            GapClass::High => "high",
            GapClass::Low => "low",
            GapClass::Mixed => "mixed",
        }
    }

    /// Whether a gap labelled `label` belongs to this report class.
    pub fn includes(self, label: GapClass) -> bool {
        self == GapClass::Mixed || self == label
    }
}

impl fmt::Display for GapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GapClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "high" => Ok(GapClass::High),
            "low" => Ok(GapClass::Low),
            "mixed" => Ok(GapClass::Mixed),
            other => Err(format!("unknown gap class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedGap {
    pub id: usize,
    pub gap: StGap,
    pub class: GapClass,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GapPlan {
    pub gaps: Vec<PlannedGap>,
}

impl GapPlan {
    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    /// One line per gap: `id lat lon k1 k2 alpha delta_t class`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# id lat lon k1 k2 alpha delta_t class\n");
        for g in &self.gaps {
            out.push_str(&format!(
                "{} {} {} {} {} {} {} {}\n",
                g.id,
                g.gap.lat_start,
                g.gap.lon_start,
                g.gap.k1,
                g.gap.k2,
                g.gap.alpha,
                g.gap.delta_t(),
                g.class
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut gaps = Vec::new();
        let mut ids = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SynthError::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 8 {
                return Err(err(format!("expected 8 fields, found {}", fields.len())));
            }
            let mut nums = [0usize; 7];
            for (slot, f) in nums.iter_mut().zip(&fields[..7]) {
                *slot = f.parse().map_err(|_| err(format!("{f:?} is not a non-negative integer")))?;
            }
            let class: GapClass = fields[7].parse().map_err(err)?;
            let gap = StGap::new(nums[1], nums[2], nums[3], nums[4], nums[5], nums[6])
                .map_err(|e| err(e.to_string()))?;
            if !ids.insert(nums[0]) {
                return Err(SynthError::DuplicateId(nums[0]));
            }
            gaps.push(PlannedGap { id: nums[0], gap, class });
        }
        Ok(Self { gaps })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SynthError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Where random gaps may go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacementRules {
    pub k1: usize,
    pub k2: usize,
    pub delta_t: usize,
    /// Observed steps required before `alpha`.
    pub before: usize,
    /// Observed steps required after `beta`.
    pub after: usize,
}

/// Places `count` gaps uniformly at random. Gaps never touch one another
/// (not even at a corner), so each one is its own connected component.
pub fn random_plan(
    dims: (usize, usize, usize),
    count: usize,
    rules: PlacementRules,
    rng: &mut SplitMix64,
) -> Result<GapPlan, SynthError> {
    let (m, n, t_len) = dims;
    let fits = rules.k1 >= 1
        && rules.k2 >= 1
        && rules.delta_t >= 1
        && rules.k1 <= m
        && rules.k2 <= n
        && rules.before + rules.delta_t + rules.after <= t_len;
    if !fits {
        return Err(SynthError::PlacementFailed {
            placed: 0,
            requested: count,
        });
    }
    let t_slots = t_len - rules.before - rules.delta_t - rules.after + 1;
    let mut gaps: Vec<PlannedGap> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while gaps.len() < count {
        attempts += 1;
        if attempts > 10_000 * count.max(1) {
            return Err(SynthError::PlacementFailed {
                placed: gaps.len(),
                requested: count,
            });
        }
        let gap = StGap::new(
            rng.below(m - rules.k1 + 1),
            rng.below(n - rules.k2 + 1),
            rules.k1,
            rules.k2,
            rules.before + rng.below(t_slots),
            rules.delta_t,
        )?;
        if gaps.iter().any(|g| g.gap.touches(&gap)) {
            continue;
        }
        gaps.push(PlannedGap {
            id: gaps.len(),
            gap,
            class: GapClass::Mixed,
        });
    }
    Ok(GapPlan { gaps })
}

/// Masks every planned gap and returns the original values keyed by gap id.
pub fn inject_gaps(
    tensor: &SpatioTemporalTensor,
    plan: &GapPlan,
) -> Result<(SpatioTemporalTensor, BTreeMap<usize, GapBlock>), SynthError> {
    let mut ids = BTreeSet::new();
    for (i, a) in plan.gaps.iter().enumerate() {
        if !ids.insert(a.id) {
            return Err(SynthError::DuplicateId(a.id));
        }
        if !a.gap.fits(tensor) {
            return Err(SynthError::OutOfBounds { id: a.id });
        }
        if let Some(b) = plan.gaps[..i].iter().find(|b| b.gap.intersects(&a.gap)) {
            return Err(SynthError::OverlappingGaps { a: b.id, b: a.id });
        }
    }
    let mut masked = tensor.clone();
    let mut truth = BTreeMap::new();
    for g in &plan.gaps {
        let block = GapBlock::from_tensor(tensor, &g.gap)?;
        if !block.is_finite() {
            return Err(SynthError::AlreadyMissing { id: g.id });
        }
        for lat in g.gap.lat_start..g.gap.lat_start + g.gap.k1 {
            for lon in g.gap.lon_start..g.gap.lon_start + g.gap.k2 {
                for t in g.gap.alpha..=g.gap.beta {
                    masked.set_missing(lat, lon, t);
                }
            }
        }
        truth.insert(g.id, block);
    }
    Ok((masked, truth))
}

/// Population variance of all values in the gap box dilated by one cell in
/// every direction (clipped to the tensor), pooled over features.
pub fn gap_variance(truth: &SpatioTemporalTensor, gap: &StGap) -> f64 {
    let lat = gap.lat_start.saturating_sub(1)..(gap.lat_start + gap.k1 + 1).min(truth.m());
    let lon = gap.lon_start.saturating_sub(1)..(gap.lon_start + gap.k2 + 1).min(truth.n());
    let time = gap.alpha.saturating_sub(1)..(gap.beta + 2).min(truth.t_len());
    let mut vals = Vec::new();
    for a in lat {
        for b in lon.clone() {
            for t in time.clone() {
                vals.extend(truth.cell(a, b, t).iter().filter(|v| !v.is_nan()).map(|v| *v as f64));
            }
        }
    }
    if vals.is_empty() {
        return 0.0;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64
}

/// `High` iff the gap variance is strictly above `threshold`.
pub fn classify_gap_variance(truth: &SpatioTemporalTensor, gap: &StGap, threshold: f64) -> GapClass {
    if gap_variance(truth, gap) > threshold {
        GapClass::High
    } else {
        GapClass::Low
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Labels every gap high or low against the median gap variance of the plan.
pub fn label_plan(truth: &SpatioTemporalTensor, plan: &mut GapPlan) {
    if plan.is_empty() {
        return;
    }
    let vars: Vec<f64> = plan.gaps.iter().map(|g| gap_variance(truth, &g.gap)).collect();
    let threshold = median(&vars);
    for (g, v) in plan.gaps.iter_mut().zip(vars) {
        g.class = if v > threshold { GapClass::High } else { GapClass::Low };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gap(lat: usize, lon: usize, k1: usize, k2: usize, alpha: usize, dt: usize) -> StGap {
        StGap::new(lat, lon, k1, k2, alpha, dt).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let plan = GapPlan {
            gaps: vec![
                PlannedGap {
                    id: 0,
                    gap: gap(1, 2, 3, 4, 5, 6),
                    class: GapClass::High,
                },
                PlannedGap {
                    id: 7,
                    gap: gap(0, 0, 1, 1, 0, 1),
                    class: GapClass::Mixed,
                },
            ],
        };
        assert_eq!(GapPlan::parse(&plan.to_text()).unwrap(), plan);
    }

    #[test]
    fn parse_comments_and_errors() {
        let p = GapPlan::parse("# header\n\n3 0 0 2 2 4 5 low # trailing\n").unwrap();
        assert_eq!(p.gaps[0].gap, gap(0, 0, 2, 2, 4, 5));
        assert!(matches!(GapPlan::parse("1 2 3"), Err(SynthError::Parse { line: 1, .. })));
        assert!(matches!(
            GapPlan::parse("0 0 0 1 1 0 1 low\n0 5 5 1 1 0 1 low"),
            Err(SynthError::DuplicateId(0))
        ));
        assert!(GapPlan::parse("0 0 0 1 1 0 1 medium").is_err());
        assert!(GapPlan::parse("0 0 0 0 1 0 1 low").is_err());
    }

    #[test]
    fn inject_counts_and_errors() {
        let x = SpatioTemporalTensor::filled(6, 6, 10, 2, 1.0).unwrap();
        let one = GapPlan {
            gaps: vec![PlannedGap {
                id: 4,
                gap: gap(1, 1, 2, 2, 2, 5),
                class: GapClass::Mixed,
            }],
        };
        let (masked, truth) = inject_gaps(&x, &one).unwrap();
        assert_eq!(masked.missing_count(), 20);
        assert_eq!(masked.values().iter().filter(|v| v.is_nan()).count(), 40);
        assert_eq!(truth[&4].values.len(), 40);

        let (same, empty) = inject_gaps(&x, &GapPlan::default()).unwrap();
        assert!(same.bit_eq(&x) && empty.is_empty());

        let mut two = one.clone();
        two.gaps.push(PlannedGap {
            id: 5,
            gap: gap(2, 2, 1, 1, 6, 1),
            class: GapClass::Mixed,
        });
        assert_eq!(inject_gaps(&x, &two).unwrap_err(), SynthError::OverlappingGaps { a: 4, b: 5 });

        let out = GapPlan {
            gaps: vec![PlannedGap {
                id: 9,
                gap: gap(5, 5, 2, 1, 0, 1),
                class: GapClass::Mixed,
            }],
        };
        assert_eq!(inject_gaps(&x, &out).unwrap_err(), SynthError::OutOfBounds { id: 9 });
    }

    #[test]
    fn classify_extremes() {
        let flat = SpatioTemporalTensor::filled(4, 4, 4, 1, 3.0).unwrap();
        let g = gap(1, 1, 2, 2, 1, 2);
        assert_eq!(classify_gap_variance(&flat, &g, 0.0), GapClass::Low);
        let wild =
            SpatioTemporalTensor::from_fn(4, 4, 4, 1, |a, b, t, _| if (a + b + t) % 2 == 0 { 100.0 } else { -100.0 })
                .unwrap();
        assert_eq!(classify_gap_variance(&wild, &g, 1.0), GapClass::High);
    }

    #[test]
    fn median_ties_go_low() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let x = SpatioTemporalTensor::filled(8, 8, 8, 1, 1.0).unwrap();
        let mut plan = GapPlan {
            gaps: (0..3)
                .map(|i| PlannedGap {
                    id: i,
                    gap: gap(0, 3 * i, 1, 1, 2, 2),
                    class: GapClass::Mixed,
                })
                .collect(),
        };
        label_plan(&x, &mut plan);
        assert!(plan.gaps.iter().all(|g| g.class == GapClass::Low));
    }

    #[test]
    fn class_membership() {
        assert!(GapClass::Mixed.includes(GapClass::High));
        assert!(GapClass::Mixed.includes(GapClass::Low));
        assert!(!GapClass::High.includes(GapClass::Low));
    }
}
