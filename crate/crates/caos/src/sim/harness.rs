//! Monte Carlo harness for coverage and efficiency experiments.
//!
//! Each trial generates a fresh exchangeable task from a per-trial seed and
//! evaluates every requested method on every test input. Trials are
//! independent units of work: they may run on any number of workers, and
//! because outcomes are collected in trial order and aggregation is a plain
//! indicator sum, the result is identical regardless of parallelism.

use rayon::prelude::*;

use crate::config::Method;
use crate::eval::{evaluate_task, mean_and_sem, EvalError, EvalSource, MethodEval};
use crate::scos::SplitSpec;

use super::task::{generate, SimError, SyntheticTaskSpec};

/// Errors from the simulation harness.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("simulation needs at least one trial")]
    NoTrials,
}

/// Outcome of one trial: the derived seed and the per-method evaluations.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub evals: Vec<MethodEval>,
}

/// Derive the seed of trial `trial` from the master seed.
///
/// The mixing function is fixed and documented so runs are reproducible
/// anywhere: `z = master + (trial + 1) * 0x9E3779B97F4A7C15` followed by the
/// SplitMix64 finalizer (`z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
/// z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`), all wrapping.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run `trials` independent trials, evaluating `methods` at every level in
/// `alphas`. The split for split-based methods is derived deterministically
/// from `ref_fraction`.
pub fn coverage_sim_multi(
    spec: &SyntheticTaskSpec,
    alphas: &[f64],
    k: usize,
    trials: usize,
    methods: &[Method],
    ref_fraction: f64,
) -> Result<Vec<TrialOutcome>, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    spec.validate()?;
    let needs_split = methods.iter().any(|m| m.needs_split());
    let split = if needs_split {
        Some(SplitSpec::by_fraction(spec.n, ref_fraction).map_err(EvalError::from)?)
    } else {
        None
    };
    let needs_sweep = methods.iter().any(|m| m.needs_calibration_sweep());

    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(spec.seed, trial as u64);
            let task = generate(&spec.with_seed(seed), needs_sweep)?;
            let source = EvalSource {
                tensor: &task.tensor,
                sweep: task.sweep.as_ref(),
            };
            let evals = evaluate_task(source, methods, alphas, k, split.as_ref())?;
            Ok(TrialOutcome { trial, seed, evals })
        })
        .collect()
}

/// Pooled per-method summary over trials and test points.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub alpha: f64,
    pub coverage: f64,
    pub coverage_sem: f64,
    pub mean_size: f64,
    pub size_sem: f64,
    /// Number of pooled (trial, test point) indicators.
    pub count: usize,
}

/// Run a single-level simulation and summarize each method.
pub fn coverage_sim(
    spec: &SyntheticTaskSpec,
    alpha: f64,
    k: usize,
    trials: usize,
    methods: &[Method],
    ref_fraction: f64,
) -> Result<Vec<MethodSummary>, HarnessError> {
    let outcomes = coverage_sim_multi(spec, &[alpha], k, trials, methods, ref_fraction)?;
    Ok(summarize(&outcomes, methods, alpha))
}

/// Pool indicators across trials and test points for each method.
pub fn summarize(outcomes: &[TrialOutcome], methods: &[Method], alpha: f64) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let mut covered = Vec::new();
            let mut sizes = Vec::new();
            for outcome in outcomes {
                for eval in &outcome.evals {
                    if eval.method == method && eval.alpha == alpha {
                        for test in &eval.per_test {
                            covered.push(test.covered);
                            sizes.push(test.set_size);
                        }
                    }
                }
            }
            let (coverage, coverage_sem) = mean_and_sem(&covered);
            let (mean_size, size_sem) = mean_and_sem(&sizes);
            MethodSummary {
                method,
                alpha,
                coverage,
                coverage_sem,
                mean_size,
                size_sem,
                count: covered.len(),
            }
        })
        .collect()
}
