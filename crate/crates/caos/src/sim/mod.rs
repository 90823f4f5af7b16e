//! Synthetic task generation, independent reference implementations, and
//! the Monte Carlo coverage harness.

mod harness;
mod naive;
mod task;

pub use harness::{
    coverage_sim, coverage_sim_multi, summarize, trial_seed, HarnessError, MethodSummary,
    TrialOutcome,
};
pub use naive::{naive_caos, naive_full_caos};
pub use task::{
    generate, generate_task, CosineProvider, SimError, SynExample, SyntheticTask, SyntheticTaskSpec,
};
