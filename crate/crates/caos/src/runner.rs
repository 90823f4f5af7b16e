//! Experiment orchestration: single-dataset runs, Monte Carlo simulations,
//! and the ablation sweeps.
//!
//! All entry points are pure functions of (input data, configuration,
//! seed): records are collected in trial order and rows aggregate them
//! deterministically, so reports are byte-identical no matter how many
//! workers run the trials.

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Method};
use crate::eval::{evaluate_task, EvalError, EvalReport, EvalSource};
use crate::io::PackageError;
use crate::scos::SplitSpec;
use crate::sim::{self, HarnessError, SimError, SyntheticTaskSpec};
use crate::tensor::ScoreTensor;

/// Where the scores come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// A precomputed, loaded score tensor.
    Tensor(Box<ScoreTensor>),
    /// A synthetic task drawn from this distribution.
    Synthetic(SyntheticTaskSpec),
}

/// Errors from experiment orchestration, classified for exit codes.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Package(#[from] PackageError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(EvalError),
    #[error("internal invariant violated: {0}")]
    Invariant(EvalError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<EvalError> for RunError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::InclusionBreach { .. } => RunError::Invariant(err),
            other => RunError::Eval(other),
        }
    }
}

impl From<HarnessError> for RunError {
    fn from(err: HarnessError) -> Self {
        match err {
            HarnessError::Sim(e) => RunError::Sim(e),
            HarnessError::Eval(e) => e.into(),
            HarnessError::NoTrials => RunError::Config(ConfigError::Field {
                field: "trials",
                message: "at least one trial is required".into(),
            }),
        }
    }
}

/// Run a thunk on a dedicated worker pool when a thread count is requested,
/// otherwise on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => job(),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build worker pool")
            .install(job),
    }
}

fn check_k_fits(k: usize, n: usize) -> Result<(), ConfigError> {
    if k + 1 > n {
        return Err(ConfigError::Field {
            field: "k",
            message: format!("k must be at most n - 1 = {}, got {k}", n.saturating_sub(1)),
        });
    }
    Ok(())
}

/// Evaluate every configured method on one dataset (a loaded tensor or one
/// synthetic task seeded from the config).
pub fn run_experiment(
    config: &ExperimentConfig,
    source: &DataSource,
) -> Result<EvalReport, RunError> {
    config.validate()?;
    let needs_sweep = config.methods.iter().any(|m| m.needs_calibration_sweep());
    let (tensor, sweep) = match source {
        DataSource::Tensor(tensor) => {
            if needs_sweep {
                let method = *config
                    .methods
                    .iter()
                    .find(|m| m.needs_calibration_sweep())
                    .expect("checked above");
                return Err(RunError::Config(ConfigError::Field {
                    field: "methods",
                    message: format!(
                        "{method} needs per-label calibration scores; use a synthetic source"
                    ),
                }));
            }
            (tensor.as_ref().clone(), None)
        }
        DataSource::Synthetic(spec) => {
            let task = sim::generate(&spec.with_seed(config.seed), needs_sweep)?;
            (task.tensor, task.sweep)
        }
    };
    check_k_fits(config.k, tensor.n())?;
    let split = if config.methods.iter().any(|m| m.needs_split()) {
        Some(SplitSpec::by_fraction(tensor.n(), config.ref_fraction).map_err(EvalError::from)?)
    } else {
        None
    };
    let source = EvalSource {
        tensor: &tensor,
        sweep: sweep.as_ref(),
    };
    let evals = with_workers(config.workers, || {
        evaluate_task(
            source,
            &config.methods,
            &config.alphas,
            config.k,
            split.as_ref(),
        )
    })?;
    Ok(EvalReport::build(
        &[(0, evals)],
        tensor.n(),
        tensor.test_count(),
    ))
}

/// Monte Carlo simulation over `config.trials` fresh synthetic tasks.
pub fn simulate(
    config: &ExperimentConfig,
    spec: &SyntheticTaskSpec,
) -> Result<EvalReport, RunError> {
    config.validate()?;
    check_k_fits(config.k, spec.n)?;
    let spec = spec.with_seed(config.seed);
    let outcomes = with_workers(config.workers, || {
        sim::coverage_sim_multi(
            &spec,
            &config.alphas,
            config.k,
            config.trials,
            &config.methods,
            config.ref_fraction,
        )
    })?;
    let evals: Vec<(usize, Vec<crate::eval::MethodEval>)> = outcomes
        .into_iter()
        .map(|outcome| (outcome.trial, outcome.evals))
        .collect();
    Ok(EvalReport::build(&evals, spec.n, spec.test_count))
}

/// One simulation per aggregation size, everything else fixed (shared seed,
/// shared trial structure). Emits a long-format table: one row per
/// (method, alpha, k).
pub fn ablate_k(
    config: &ExperimentConfig,
    spec: &SyntheticTaskSpec,
    k_values: &[usize],
) -> Result<EvalReport, RunError> {
    if k_values.is_empty() {
        return Err(RunError::Config(ConfigError::Field {
            field: "k",
            message: "ablate-k needs at least one k value".into(),
        }));
    }
    for &k in k_values {
        check_k_fits(k, spec.n)?;
    }
    let mut report = EvalReport::default();
    for &k in k_values {
        let config = ExperimentConfig {
            k,
            ..config.clone()
        };
        report.merge(simulate(&config, spec)?);
    }
    Ok(report)
}

/// The data-reuse comparison: the split baseline, the three split variants
/// of the aggregated method, and the fully reused method, on identical
/// tasks.
pub fn ablate_splits(
    config: &ExperimentConfig,
    spec: &SyntheticTaskSpec,
) -> Result<EvalReport, RunError> {
    let config = ExperimentConfig {
        methods: vec![
            Method::Scos,
            Method::SplitCaosRefCal,
            Method::SplitCaosCal,
            Method::SplitCaosRef,
            Method::Caos,
        ],
        ..config.clone()
    };
    simulate(&config, spec)
}
