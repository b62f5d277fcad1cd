use std::time::Instant;

use super::data::{generate_splits, GenerateSpec};
use super::eval::{evaluate, DginFiller, EvalReport, GapFiller, KrigingFiller, MeanFiller};
use super::train::{train, TrainConfig, TrainOutcome};
use super::HarnessError;
use crate::baselines::{ContextWindow, KrigingConfig};
use crate::model::DginHyperparams;

/// Train on one field, pick the epoch on a second, score on a third.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: GenerateSpec,
    pub train: TrainConfig,
    pub mean_history: usize,
    pub kriging: KrigingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let (p, h) = (3, 5);
        Self {
            data: GenerateSpec::default(),
            train: TrainConfig {
                eval_every: 10,
                keep_best: true,
                ..TrainConfig::new(DginHyperparams::with_defaults(p, h, 1))
            },
            mean_history: 5,
            kriging: KrigingConfig {
                window: ContextWindow {
                    radius: p,
                    before: 2,
                    after: 0,
                },
                ..KrigingConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub seed: u64,
    pub train_pairs: usize,
    pub skipped_strands: usize,
    pub train_seconds: f64,
    pub outcome: TrainOutcome,
    pub report: EvalReport,
}

/// One seed of the comparison: methods `dgin`, `mean` and `kriging` on the
/// test split.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentRun, HarnessError> {
    let [train_split, val_split, test_split] = generate_splits(&config.data, seed)?;
    let hp = config.train.hyper;
    let (pairs, skipped) = train_split.pairs(hp.p, hp.h)?;
    let (val_pairs, _) = val_split.pairs(hp.p, hp.h)?;
    let train_config = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let start = Instant::now();
    let outcome = train(&pairs, &val_pairs, &train_config)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let dgin = DginFiller {
        name: "dgin".into(),
        params: &outcome.params,
        history_only: false,
    };
    let mean = MeanFiller {
        k: config.mean_history,
    };
    let kriging = KrigingFiller {
        name: "kriging".into(),
        config: config.kriging,
    };
    let methods: [&dyn GapFiller; 3] = [&dgin, &mean, &kriging];
    let report = evaluate(&methods, &test_split.masked, &test_split.plan, &test_split.blocks)?;
    Ok(ExperimentRun {
        seed,
        train_pairs: pairs.len(),
        skipped_strands: skipped,
        train_seconds,
        outcome,
        report,
    })
}
