use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::grid::{decompose, stgf, GapBlock, GapId, SpatioTemporalTensor, TrainingPair};
use crate::ndiff::SplitMix64;
use crate::synth::{generate, inject_gaps, label_plan, random_plan, FieldSpec, GapPlan, PlacementRules};

/// Gap layout for one split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapSpec {
    pub count: usize,
    pub k1: usize,
    pub k2: usize,
    pub delta_t: usize,
    /// Observed steps kept before and after every gap.
    pub margin: usize,
}

impl Default for GapSpec {
    fn default() -> Self {
        Self {
            count: 28,
            k1: 4,
            k2: 4,
            delta_t: 10,
            margin: 5,
        }
    }
}

impl GapSpec {
    pub fn rules(&self) -> PlacementRules {
        PlacementRules {
            k1: self.k1,
            k2: self.k2,
            delta_t: self.delta_t,
            before: self.margin,
            after: self.margin,
        }
    }
}

/// What `generate` reads from its spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateSpec {
    pub field: FieldSpec,
    /// Layout of the training split.
    pub gaps: GapSpec,
    /// Gap counts of the validation and test splits. Each is a fresh draw
    /// of field and plan with the training gap shape.
    pub validation_gaps: usize,
    pub test_gaps: usize,
}

impl Default for GenerateSpec {
    fn default() -> Self {
        Self {
            field: FieldSpec::default(),
            gaps: GapSpec::default(),
            validation_gaps: 8,
            test_gaps: 8,
        }
    }
}

/// A masked tensor with its ground truth and labelled plan.
#[derive(Debug, Clone)]
pub struct Split {
    pub masked: SpatioTemporalTensor,
    pub truth: SpatioTemporalTensor,
    pub plan: GapPlan,
    pub blocks: BTreeMap<usize, GapBlock>,
}

impl Split {
    /// Field from `field_seed`, plan from `plan_seed`, labels against the
    /// median gap variance.
    pub fn generate(field: &FieldSpec, gaps: &GapSpec, field_seed: u64, plan_seed: u64) -> Result<Self, HarnessError> {
        let truth = generate(&FieldSpec {
            seed: field_seed,
            ..field.clone()
        })?;
        let mut plan = random_plan(
            (truth.m(), truth.n(), truth.t_len()),
            gaps.count,
            gaps.rules(),
            &mut SplitMix64::new(plan_seed),
        )?;
        label_plan(&truth, &mut plan);
        let (masked, blocks) = inject_gaps(&truth, &plan)?;
        Ok(Self {
            masked,
            truth,
            plan,
            blocks,
        })
    }

    pub fn from_parts(masked: SpatioTemporalTensor, truth: SpatioTemporalTensor, plan: GapPlan) -> Result<Self, HarnessError> {
        if masked.dims() != truth.dims() {
            return Err(HarnessError::Config("masked and truth tensors differ in shape".into()));
        }
        let mut blocks = BTreeMap::new();
        for g in &plan.gaps {
            let b = GapBlock::from_tensor(&truth, &g.gap)?;
            if !b.is_finite() {
                return Err(HarnessError::MissingTruth(g.id));
            }
            blocks.insert(g.id, b);
        }
        Ok(Self {
            masked,
            truth,
            plan,
            blocks,
        })
    }

    /// One training pair per strand. Strands with no usable context are
    /// skipped and counted.
    pub fn pairs(&self, p: usize, h: usize) -> Result<(Vec<TrainingPair>, usize), HarnessError> {
        let mut pairs = Vec::new();
        let mut skipped = 0;
        for g in &self.plan.gaps {
            for s in decompose(&g.gap, GapId(g.id)) {
                match TrainingPair::from_truth(&self.masked, &self.truth, &s, p, h) {
                    Ok(pair) => pairs.push(pair),
                    Err(crate::grid::GridError::NoContext { .. }) => skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Ok((pairs, skipped))
    }

    pub fn paths(dir: &Path, name: &str) -> [PathBuf; 3] {
        [
            dir.join(format!("{name}.stgf")),
            dir.join(format!("{name}.truth.stgf")),
            dir.join(format!("{name}.gaps")),
        ]
    }

    /// Writes `<name>.stgf`, `<name>.truth.stgf` and `<name>.gaps`.
    pub fn save(&self, dir: &Path, name: &str) -> Result<(), HarnessError> {
        let [masked, truth, gaps] = Self::paths(dir, name);
        stgf::save(&self.masked, masked)?;
        stgf::save(&self.truth, truth)?;
        self.plan.save(gaps)?;
        Ok(())
    }

    pub fn load(dir: &Path, name: &str) -> Result<Self, HarnessError> {
        let [masked, truth, gaps] = Self::paths(dir, name);
        Self::from_parts(stgf::load(masked)?, stgf::load(truth)?, GapPlan::load(gaps)?)
    }
}

/// Field and plan seeds for the train, test and validation splits, in that order.
pub fn split_seeds(seed: u64) -> [u64; 6] {
    let mut rng = SplitMix64::new(seed);
    std::array::from_fn(|_| rng.next_u64())
}

/// File stems used by [`generate_splits`] output directories.
pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// Train, validation and test splits of the same process.
pub fn generate_splits(spec: &GenerateSpec, seed: u64) -> Result<[Split; 3], HarnessError> {
    let [tf, tp, ef, ep, vf, vp] = split_seeds(seed);
    let with_count = |count| GapSpec { count, ..spec.gaps };
    Ok([
        Split::generate(&spec.field, &spec.gaps, tf, tp)?,
        Split::generate(&spec.field, &with_count(spec.validation_gaps), vf, vp)?,
        Split::generate(&spec.field, &with_count(spec.test_gaps), ef, ep)?,
    ])
}
