use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::stats::{paired_t_test, TTest};
use super::HarnessError;
use crate::baselines::{idw_gap, krige_gap, mean_gap, IdwConfig, KrigingConfig};
use crate::grid::{GapBlock, SpatioTemporalTensor, StGap};
use crate::model::DginParameters;
use crate::synth::{GapClass, GapPlan};

/// Anything that can fill a gap from the data around it.
pub trait GapFiller: Sync {
    fn name(&self) -> &str;
    fn fill(&self, tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, String>;
}

pub struct MeanFiller {
    pub k: usize,
}

impl GapFiller for MeanFiller {
    fn name(&self) -> &str {
        "mean"
    }

    fn fill(&self, tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, String> {
        mean_gap(tensor, gap, self.k).map_err(|e| e.to_string())
    }
}

pub struct IdwFiller {
    pub config: IdwConfig,
}

impl GapFiller for IdwFiller {
    fn name(&self) -> &str {
        "idw"
    }

    fn fill(&self, tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, String> {
        idw_gap(tensor, gap, &self.config).map_err(|e| e.to_string())
    }
}

pub struct KrigingFiller {
    pub name: String,
    pub config: KrigingConfig,
}

impl GapFiller for KrigingFiller {
    fn name(&self) -> &str {
        &self.name
    }

    fn fill(&self, tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, String> {
        krige_gap(tensor, gap, &self.config).map_err(|e| e.to_string())
    }
}

pub struct DginFiller<'a> {
    pub name: String,
    pub params: &'a DginParameters,
    pub history_only: bool,
}

impl GapFiller for DginFiller<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn fill(&self, tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, String> {
        let r = if self.history_only {
            self.params.fill_gap_history_only(tensor, gap)
        } else {
            self.params.fill_gap(tensor, gap)
        };
        r.map_err(|e| e.to_string())
    }
}

/// Returns the stored ground truth; useful as a sanity reference.
pub struct OracleFiller<'a> {
    pub truth: &'a BTreeMap<usize, GapBlock>,
}

impl GapFiller for OracleFiller<'_> {
    fn name(&self) -> &str {
        "oracle"
    }

    fn fill(&self, _tensor: &SpatioTemporalTensor, gap: &StGap) -> Result<GapBlock, String> {
        self.truth
            .values()
            .find(|b| b.gap == *gap)
            .cloned()
            .ok_or_else(|| "no truth for gap".to_string())
    }
}

#[derive(Debug, Clone)]
pub struct GapOutcome {
    pub id: usize,
    pub class: GapClass,
    pub strands: usize,
    pub result: Result<(f64, GapBlock), String>,
}

impl GapOutcome {
    pub fn mse(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.0)
    }
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub name: String,
    pub gaps: Vec<GapOutcome>,
    /// Summed wall-clock time of the per-gap fills.
    pub seconds: f64,
}

impl MethodResult {
    /// Mean per-gap MSE over the successful gaps of `class`.
    pub fn class_mse(&self, class: GapClass) -> Option<(f64, usize)> {
        let v: Vec<f64> = self
            .gaps
            .iter()
            .filter(|g| class.includes(g.class))
            .filter_map(GapOutcome::mse)
            .collect();
        (!v.is_empty()).then(|| (v.iter().sum::<f64>() / v.len() as f64, v.len()))
    }

    pub fn strands_evaluated(&self) -> usize {
        self.gaps.iter().filter(|g| g.result.is_ok()).map(|g| g.strands).sum()
    }

    pub fn failures(&self) -> usize {
        self.gaps.iter().filter(|g| g.result.is_err()).count()
    }
}

#[derive(Debug, Clone)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    pub class: GapClass,
    pub n: usize,
    /// `Err` when the class has fewer than two common gaps.
    pub test: Result<TTest, String>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub methods: Vec<MethodResult>,
    pub tests: Vec<PairTest>,
}

impl EvalReport {
    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn test(&self, a: &str, b: &str, class: GapClass) -> Option<&PairTest> {
        self.tests.iter().find(|t| t.a == a && t.b == b && t.class == class)
    }

    /// `kind,method,other,class,n,value,p_value`, one row per class MSE,
    /// timing and pairwise test.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,method,other,class,n,value,p_value\n");
        for m in &self.methods {
            for class in GapClass::ALL {
                if let Some((mse, n)) = m.class_mse(class) {
                    let _ = writeln!(out, "mse,{},,{},{},{:.9e},", m.name, class, n, mse);
                }
            }
            let _ = writeln!(out, "seconds,{},,,{},{:.6},", m.name, m.gaps.len(), m.seconds);
            let _ = writeln!(out, "strands,{},,,{},{},", m.name, m.gaps.len(), m.strands_evaluated());
            let _ = writeln!(out, "failures,{},,,{},{},", m.name, m.gaps.len(), m.failures());
        }
        for t in &self.tests {
            if let Ok(r) = &t.test {
                let _ = writeln!(out, "ttest,{},{},{},{},{},{:.6e}", t.a, t.b, t.class, t.n, r.t, r.p);
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<18} {:>12} {:>12} {:>12} {:>10} {:>8}", "method", "high", "low", "mixed", "seconds", "failed");
        for m in &self.methods {
            let cell = |c| m.class_mse(c).map(|(v, _)| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<18} {:>12} {:>12} {:>12} {:>10.3} {:>8}",
                m.name,
                cell(GapClass::High),
                cell(GapClass::Low),
                cell(GapClass::Mixed),
                m.seconds,
                m.failures()
            );
        }
        if !self.tests.is_empty() {
            let _ = writeln!(out, "\npaired t-tests on per-gap MSE (a - b)");
            for t in &self.tests {
                match &t.test {
                    Ok(r) => {
                        let _ = writeln!(out, "{} vs {} [{}] n={}: t={:.4} p={:.4e}", t.a, t.b, t.class, t.n, r.t, r.p);
                    }
                    Err(e) => {
                        let _ = writeln!(out, "{} vs {} [{}] n={}: {e}", t.a, t.b, t.class, t.n);
                    }
                }
            }
        }
        out
    }
}

/// Runs every method on every gap (gaps in parallel), scores against the
/// truth and compares methods pairwise. A gap that any method fails on is
/// left out of every t-test so the samples stay paired.
pub fn evaluate(
    methods: &[&dyn GapFiller],
    masked: &SpatioTemporalTensor,
    plan: &GapPlan,
    truth: &BTreeMap<usize, GapBlock>,
) -> Result<EvalReport, HarnessError> {
    for g in &plan.gaps {
        if !truth.contains_key(&g.id) {
            return Err(HarnessError::MissingTruth(g.id));
        }
    }
    let mut results = Vec::with_capacity(methods.len());
    for method in methods {
        let gaps: Vec<(GapOutcome, f64)> = plan
            .gaps
            .par_iter()
            .map(|g| {
                let start = Instant::now();
                let filled = method.fill(masked, &g.gap);
                let secs = start.elapsed().as_secs_f64();
                let result = filled.and_then(|block| {
                    if block.gap != g.gap || !block.is_finite() {
                        Err("prediction has the wrong shape or non-finite values".to_string())
                    } else {
                        Ok((block.mse(&truth[&g.id]), block))
                    }
                });
                (
                    GapOutcome {
                        id: g.id,
                        class: g.class,
                        strands: g.gap.k1 * g.gap.k2,
                        result,
                    },
                    secs,
                )
            })
            .collect();
        let seconds = gaps.iter().map(|g| g.1).sum();
        results.push(MethodResult {
            name: method.name().to_string(),
            gaps: gaps.into_iter().map(|g| g.0).collect(),
            seconds,
        });
    }

    let common: Vec<usize> = (0..plan.gaps.len())
        .filter(|&i| results.iter().all(|m| m.gaps[i].result.is_ok()))
        .collect();
    let mut tests = Vec::new();
    for (ia, a) in results.iter().enumerate() {
        for b in &results[ia + 1..] {
            for class in GapClass::ALL {
                let idx: Vec<usize> = common.iter().copied().filter(|&i| class.includes(plan.gaps[i].class)).collect();
                let xa: Vec<f64> = idx.iter().map(|&i| a.gaps[i].mse().expect("common gap")).collect();
                let xb: Vec<f64> = idx.iter().map(|&i| b.gaps[i].mse().expect("common gap")).collect();
                tests.push(PairTest {
                    a: a.name.clone(),
                    b: b.name.clone(),
                    class,
                    n: idx.len(),
                    test: paired_t_test(&xa, &xb).map_err(|e| e.to_string()),
                });
            }
        }
    }
    Ok(EvalReport {
        methods: results,
        tests,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub gaps: usize,
    pub failures: usize,
    pub total_seconds: f64,
}

impl BenchRow {
    pub fn per_gap_seconds(&self) -> f64 {
        self.total_seconds / self.gaps.max(1) as f64
    }
}

/// Times each method over the same gaps, one gap after another on a single
/// worker thread so the numbers are comparable across methods.
pub fn bench(
    methods: &[&dyn GapFiller],
    masked: &SpatioTemporalTensor,
    plan: &GapPlan,
) -> Result<Vec<BenchRow>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(pool.install(|| {
        methods
            .iter()
            .map(|m| {
                let mut failures = 0;
                let start = Instant::now();
                for g in &plan.gaps {
                    if m.fill(masked, &g.gap).is_err() {
                        failures += 1;
                    }
                }
                BenchRow {
                    method: m.name().to_string(),
                    gaps: plan.gaps.len(),
                    failures,
                    total_seconds: start.elapsed().as_secs_f64(),
                }
            })
            .collect()
    }))
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:<24} {:>8} {:>14} {:>14}\n", "Method", "Gaps", "Total (s)", "Per gap (s)");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<24} {:>8} {:>14.4} {:>14.6}",
            r.method,
            r.gaps,
            r.total_seconds,
            r.per_gap_seconds()
        );
    }
    out
}
