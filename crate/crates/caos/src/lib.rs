//! Calibrated prediction sets from pools of one-shot predictors.
//!
//! A single labeled example plus a pretrained model induces a *one-shot
//! predictor*: anything that can score how well a candidate label fits a
//! target input, conditioned on that one demonstration. With `n` labeled
//! examples you get `n` such predictors of wildly varying usefulness, and
//! the question this crate answers is how to turn their raw nonconformity
//! scores into a *prediction set* with a finite-sample marginal coverage
//! guarantee, while keeping the set small.
//!
//! The main method aggregates, for each candidate label, the `k` smallest
//! scores across all predictors (so the most compatible references carry
//! the decision), and calibrates with a leave-one-out scheme in which every
//! example is scored by the predictors of all the others. Despite reusing
//! every example for both reference and calibration duty, the resulting
//! sets contain the corresponding full-conformal sets, which is what makes
//! the usual `1 - alpha` coverage bound carry over; the full-conformal
//! construction ([`full`]) and the classical split baseline ([`scos`]) are
//! implemented alongside for comparison and verification.
//!
//! Everything operates on a [`ScoreTensor`] of precomputed scores: models
//! stay outside this crate, behind the [`ScoreProvider`] contract.
//!
//! # Example
//!
//! ```
//! use caos::sim::{generate_task, SyntheticTaskSpec};
//!
//! let tensor = generate_task(&SyntheticTaskSpec {
//!     n: 20,
//!     test_count: 1,
//!     label_count: 5,
//!     seed: 7,
//!     ..SyntheticTaskSpec::default()
//! })
//! .unwrap();
//! let calibration = caos::caos::calibrate(&tensor, 0.1, 3).unwrap();
//! let set = caos::caos::predict(&tensor, 0, &calibration).unwrap();
//! assert!(set.size() >= 1);
//! ```
//!
//! The `examples/` directory walks through each capability; the `caos`
//! binary exposes the same machinery as subcommands.

pub mod agg;
pub mod caos;
pub mod cli;
pub mod config;
pub mod eval;
pub mod full;
pub mod io;
pub mod label;
pub mod provider;
pub mod runner;
pub mod scos;
pub mod sim;
pub mod tensor;

pub use agg::{calibration_level, conformal_quantile, min_sum_k, AggregateError, ScorePool};
pub use caos::{CalibrationResult, MethodError, PredictionSet};
pub use config::{ConfigError, ExperimentConfig, Method};
pub use eval::{
    average_size, empirical_coverage, EvalError, EvalReport, EvalSource, RawRecord, ReportFormat,
    ReportRow,
};
pub use full::FullPrediction;
pub use io::PackageError;
pub use label::LabelSpace;
pub use provider::{materialize, ExampleRef, MaterializeError, ScoreProvider};
pub use runner::{ablate_k, ablate_splits, run_experiment, simulate, DataSource, RunError};
pub use scos::{CalibrationSweep, SplitError, SplitSpec, SplitVariant};
pub use sim::{SyntheticTask, SyntheticTaskSpec};
pub use tensor::{ScoreTensor, TensorError};
