use std::path::Path;

use anyhow::{anyhow, Context};
use log::{info, warn};
use stgap::baselines::{IdwConfig, KrigingConfig};
use stgap::grid::{find_gaps, stgf};
use stgap::harness::{
    self, generate_splits, BenchRow, DginFiller, GapFiller, GenerateSpec, HarnessError, IdwFiller, KrigingFiller,
    MeanFiller, Split, TrainConfig, SPLIT_NAMES,
};
use stgap::model::{checkpoint, check_strand_gradient, DginHyperparams, DginParameters, ModelError};
use stgap::ndiff::{GradCheckConfig, NdiffError};

use crate::{BenchArgs, EvalArgs, FillArgs, GenerateArgs, GradcheckArgs, MethodArgs, TrainArgs};

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const NUMERIC: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            error: anyhow!(msg.into()),
        }
    }

    fn data(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: DATA,
            error: error.into(),
        }
    }
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Hyper(_) => USAGE,
        ModelError::Ndiff(NdiffError::NonFinite) => NUMERIC,
        _ => DATA,
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::Config(_) => USAGE,
            HarnessError::NonFinite(_) | HarnessError::Ndiff(NdiffError::NonFinite) => NUMERIC,
            HarnessError::Model(m) => model_code(m),
            _ => DATA,
        };
        Self { code, error: e.into() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Self {
            code: model_code(&e),
            error: e.into(),
        }
    }
}

/// Sizes the global pool from `STGAP_THREADS` when it is set.
pub fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("STGAP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("STGAP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn load_spec(path: Option<&Path>) -> Result<GenerateSpec, Failure> {
    let Some(path) = path else {
        return Ok(GenerateSpec::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::data)?;
    toml::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::data)
}

pub fn generate(a: &GenerateArgs) -> Result<(), Failure> {
    if a.out.is_none() && a.data.is_none() {
        return Err(Failure::usage("nothing to write: pass --out/--gaps, --data, or both"));
    }
    let spec = load_spec(a.spec.as_deref())?;
    let splits = generate_splits(&spec, a.seed)?;
    let train = &splits[0];
    if let (Some(out), Some(gaps)) = (&a.out, &a.gaps) {
        stgf::save(&train.masked, out).map_err(Failure::data)?;
        train.plan.save(gaps).map_err(Failure::data)?;
        if let Some(truth) = &a.truth {
            stgf::save(&train.truth, truth).map_err(Failure::data)?;
        }
        info!("wrote {} gaps to {}", train.plan.len(), out.display());
    }
    if let Some(dir) = &a.data {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(Failure::data)?;
        for (split, name) in splits.iter().zip(SPLIT_NAMES) {
            split.save(dir, name)?;
        }
        info!("wrote train/val/test splits to {}", dir.display());
    }
    Ok(())
}

fn load_split(dir: &Path, name: &str) -> Result<Split, Failure> {
    Split::load(dir, name).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            error: f.error.context(format!("loading split {name:?} from {}", dir.display())),
            ..f
        }
    })
}

pub fn train(a: &TrainArgs) -> Result<(), Failure> {
    let mut hyper = DginHyperparams::with_defaults(a.p, a.horizon, 1);
    hyper.enc_dim = a.enc_dim.unwrap_or(hyper.enc_dim);
    hyper.hidden_dim = a.hidden.unwrap_or(hyper.hidden_dim);
    hyper.attn_dim = a.attn_dim.unwrap_or(hyper.attn_dim);
    let train_split = load_split(&a.data, "train")?;
    hyper.d = train_split.truth.d();
    hyper.validate()?;

    let (pairs, skipped) = train_split.pairs(hyper.p, hyper.h)?;
    if skipped > 0 {
        warn!("{skipped} training strands have no context and were skipped");
    }
    let val_present = Split::paths(&a.data, "val").iter().all(|p| p.exists());
    let validation = if val_present && a.eval_every > 0 {
        load_split(&a.data, "val")?.pairs(hyper.p, hyper.h)?.0
    } else {
        Vec::new()
    };
    let config = TrainConfig {
        lr: a.lr,
        batch: a.batch,
        epochs: a.epochs,
        seed: a.seed,
        eval_every: if validation.is_empty() { 0 } else { a.eval_every },
        keep_best: !validation.is_empty(),
        ..TrainConfig::new(hyper)
    };
    info!(
        "training on {} strands ({} validation), {} parameters",
        pairs.len(),
        validation.len(),
        DginParameters::init(hyper, 0)?.parameter_count()
    );
    let outcome = harness::train(&pairs, &validation, &config)?;
    checkpoint::save(&outcome.params, &a.out)?;
    println!(
        "trained {} epochs, final loss {:.6}, kept epoch {}, wrote {}",
        outcome.history.len(),
        outcome.losses().last().copied().unwrap_or(f64::NAN),
        outcome.selected_epoch,
        a.out.display()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<DginParameters, Failure> {
    checkpoint::load(path).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            error: f.error.context(format!("loading {}", path.display())),
            ..f
        }
    })
}

pub fn fill(a: &FillArgs) -> Result<(), Failure> {
    let params = load_model(&a.model)?;
    let mut tensor = stgf::load(&a.tensor)
        .with_context(|| format!("loading {}", a.tensor.display()))
        .map_err(Failure::data)?;
    if tensor.d() != params.hyper().d {
        return Err(Failure::data(anyhow!(
            "tensor has {} features per cell, model expects {}",
            tensor.d(),
            params.hyper().d
        )));
    }
    let gaps = find_gaps(&tensor).map_err(Failure::data)?;
    let mut blocks = Vec::with_capacity(gaps.len());
    for gap in &gaps {
        let block = if a.history_only {
            params.fill_gap_history_only(&tensor, gap)
        } else {
            params.fill_gap(&tensor, gap)
        }
        .map_err(|e| {
            let f = Failure::from(e);
            Failure {
                error: f.error.context(format!("filling {gap:?}")),
                ..f
            }
        })?;
        if !block.is_finite() {
            return Err(Failure {
                code: NUMERIC,
                error: anyhow!("non-finite prediction for {gap:?}"),
            });
        }
        blocks.push(block);
    }
    for b in &blocks {
        b.write_into(&mut tensor);
    }
    stgf::save(&tensor, &a.out).map_err(Failure::data)?;
    println!("filled {} gaps, wrote {}", gaps.len(), a.out.display());
    Ok(())
}

/// Everything the method list may need, owned here so fillers can borrow it.
struct Methods {
    names: Vec<String>,
    params: Option<DginParameters>,
}

impl Methods {
    fn load(a: &MethodArgs) -> Result<Self, Failure> {
        const KNOWN: [&str; 6] = ["mean", "idw", "kriging", "kriging-full", "dgin", "dgin-history"];
        let names: Vec<String> = a.methods.iter().map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect();
        if names.is_empty() {
            return Err(Failure::usage("no methods given"));
        }
        for n in &names {
            if !KNOWN.contains(&n.as_str()) {
                return Err(Failure::usage(format!("unknown method {n:?}; expected one of {}", KNOWN.join(", "))));
            }
        }
        let needs_model = names.iter().any(|n| n.starts_with("dgin"));
        let params = match (&a.model, needs_model) {
            (Some(path), true) => Some(load_model(path)?),
            (None, true) => return Err(Failure::usage("dgin methods need --model")),
            _ => None,
        };
        Ok(Self { names, params })
    }

    /// Kriging windows follow the model's patch and horizon when one is loaded.
    fn fillers(&self, mean_history: usize) -> Vec<Box<dyn GapFiller + '_>> {
        let (p, h) = self.params.as_ref().map_or((3, 5), |m| (m.hyper().p, m.hyper().h));
        let truncated = KrigingConfig {
            window: stgap::baselines::ContextWindow {
                radius: p,
                before: 2,
                after: 0,
            },
            ..KrigingConfig::default()
        };
        self.names
            .iter()
            .map(|n| -> Box<dyn GapFiller + '_> {
                match n.as_str() {
                    "mean" => Box::new(MeanFiller { k: mean_history }),
                    "idw" => Box::new(IdwFiller {
                        config: IdwConfig::default(),
                    }),
                    "kriging" => Box::new(KrigingFiller {
                        name: n.clone(),
                        config: truncated,
                    }),
                    "kriging-full" => Box::new(KrigingFiller {
                        name: n.clone(),
                        config: KrigingConfig::full(p, h),
                    }),
                    _ => Box::new(DginFiller {
                        name: n.clone(),
                        params: self.params.as_ref().expect("model loaded for dgin methods"),
                        history_only: n == "dgin-history",
                    }),
                }
            })
            .collect()
    }
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let methods = Methods::load(&a.methods)?;
    let split = load_split(&a.methods.data, &a.methods.split)?;
    let fillers = methods.fillers(a.methods.mean_history);
    let refs: Vec<&dyn GapFiller> = fillers.iter().map(|f| f.as_ref()).collect();
    let report = harness::evaluate(&refs, &split.masked, &split.plan, &split.blocks)?;
    print!("{}", report.to_text());
    if let Some(path) = &a.report {
        std::fs::write(path, report.to_csv())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::data)?;
    }
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let methods = Methods::load(&a.methods)?;
    let split = load_split(&a.methods.data, &a.methods.split)?;
    let fillers = methods.fillers(a.methods.mean_history);
    let refs: Vec<&dyn GapFiller> = fillers.iter().map(|f| f.as_ref()).collect();
    let rows: Vec<BenchRow> = harness::bench(&refs, &split.masked, &split.plan)?;
    print!("{}", harness::bench_table(&rows));
    Ok(())
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<(), Failure> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(Failure::usage("--tol must be positive"));
    }
    let hyper = DginHyperparams {
        p: a.p,
        h: a.horizon,
        d: 1,
        enc_dim: a.enc_dim,
        hidden_dim: a.hidden,
        attn_dim: a.attn_dim,
    };
    hyper.validate()?;
    let config = GradCheckConfig {
        tolerance: a.tol,
        ..GradCheckConfig::default()
    };
    let mut worst: f64 = 0.0;
    for seed in a.seed..a.seed + a.count.max(1) {
        let report = check_strand_gradient(hyper, a.delta_t, seed, config)?;
        println!(
            "seed {seed}: max relative error {:.3e} ({})",
            report.max_rel_error,
            if report.passed { "ok" } else { "FAILED" }
        );
        worst = worst.max(report.max_rel_error);
        if !report.passed {
            return Err(Failure {
                code: NUMERIC,
                error: anyhow!("gradient check failed at seed {seed}: {:.3e} > {:.1e}", report.max_rel_error, a.tol),
            });
        }
    }
    println!("gradient check passed, worst {worst:.3e} < {:.1e}", a.tol);
    Ok(())
}
