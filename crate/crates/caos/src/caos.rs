//! Leave-one-out calibrated aggregation of one-shot predictors.
//!
//! Every labeled example plays two roles: it induces a one-shot predictor,
//! and it serves as a calibration point. The calibration score of example
//! `i` aggregates the `k` smallest scores assigned to `(X_i, Y_i)` by the
//! predictors induced by the *other* examples:
//!
//! ```text
//! S_i = min_sum_k({ p(i, j) : j != i })
//! ```
//!
//! The threshold is the conformal quantile of these scores at level
//! `(1 - alpha) * (1 + 1/n)`. At test time the aggregated score of a
//! candidate label pools all `n` predictors, and the prediction set keeps
//! every label whose aggregated score is at most the threshold (ties at the
//! threshold are included).

use thiserror::Error;

use crate::agg::{self, AggregateError};
use crate::config::Method;
use crate::tensor::ScoreTensor;

/// Errors for the calibrated-aggregation methods.
#[derive(Debug, Error, PartialEq)]
pub enum MethodError {
    #[error("leave-one-out pools have size n-1 = {pool}, smaller than k = {k}")]
    PoolTooSmall { pool: usize, k: usize },
    #[error("alpha must lie in (0, 1), got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("test index {index} out of range ({count} test inputs)")]
    TestIndexOutOfRange { index: usize, count: usize },
    #[error("calibration was built for n = {expected}, tensor has n = {found}")]
    CalibrationMismatch { expected: usize, found: usize },
    #[error("full-conformal score block is absent")]
    FullBlockMissing,
    #[error("reference {ref_id} is not in the reference split")]
    RefNotInSplit { ref_id: usize },
    #[error("tensor carries no truth labels")]
    MissingTruth,
    #[error("index {index} out of range for dataset of size {n}")]
    ExampleOutOfRange { index: usize, n: usize },
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
}

/// Calibration output: the per-example scores, the quantile level and the
/// threshold they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// Method this calibration belongs to.
    pub method: Method,
    /// Per-example calibration scores, in example order.
    pub scores: Vec<f64>,
    /// Quantile level `(1 - alpha) * (1 + 1/n)`.
    pub level: f64,
    /// Conformal quantile of `scores` at `level`.
    pub threshold: f64,
    /// Target miscoverage.
    pub alpha: f64,
    /// Aggregation size.
    pub k: usize,
    /// Number of calibration scores.
    pub n: usize,
}

/// A prediction set over a finite label space.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    /// Member labels, ascending.
    members: Vec<usize>,
    /// Aggregated score per label.
    scores: Vec<f64>,
    /// Threshold the members were compared against.
    threshold: f64,
}

impl PredictionSet {
    /// Build from per-label scores: members are the labels whose score is
    /// at most `threshold`.
    pub fn from_scores(scores: Vec<f64>, threshold: f64) -> Self {
        let members = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= threshold)
            .map(|(y, _)| y)
            .collect();
        Self {
            members,
            scores,
            threshold,
        }
    }

    /// Member labels, ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Number of member labels.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Whether `label` is a member.
    pub fn contains(&self, label: usize) -> bool {
        self.members.binary_search(&label).is_ok()
    }

    /// Aggregated score per label.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Threshold used for membership.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Whether every member of `self` is a member of `other`.
    pub fn is_subset_of(&self, other: &PredictionSet) -> bool {
        self.members.iter().all(|&y| other.contains(y))
    }
}

/// Leave-one-out calibration scores `S_1..S_n`.
///
/// The diagonal self-score `p(i, i)` is never read. Requires `n >= k + 1`
/// so that every leave-one-out pool has at least `k` members.
pub fn calibration_scores(tensor: &ScoreTensor, k: usize) -> Result<Vec<f64>, MethodError> {
    let n = tensor.n();
    check_pool(n.saturating_sub(1), k)?;
    let mut pool = Vec::with_capacity(n - 1);
    (0..n)
        .map(|i| {
            pool.clear();
            let row = tensor.p_row(i);
            pool.extend(row[..i].iter().chain(&row[i + 1..]));
            Ok(agg::min_sum_k(&pool, k)?)
        })
        .collect()
}

/// Calibrate: leave-one-out scores, then the conformal quantile at level
/// `(1 - alpha) * (1 + 1/n)`.
pub fn calibrate(
    tensor: &ScoreTensor,
    alpha: f64,
    k: usize,
) -> Result<CalibrationResult, MethodError> {
    let scores = calibration_scores(tensor, k)?;
    calibrate_from_scores(Method::Caos, scores, alpha, k)
}

/// Threshold precomputed calibration scores at miscoverage `alpha`.
pub fn calibrate_from_scores(
    method: Method,
    scores: Vec<f64>,
    alpha: f64,
    k: usize,
) -> Result<CalibrationResult, MethodError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MethodError::InvalidAlpha { alpha });
    }
    let n = scores.len();
    let level = agg::calibration_level(alpha, n);
    let threshold = agg::conformal_quantile(&scores, level)?;
    Ok(CalibrationResult {
        method,
        scores,
        level,
        threshold,
        alpha,
        k,
        n,
    })
}

/// Aggregated test scores: for each candidate label, the min-sum-k over the
/// scores assigned by all `n` predictors.
pub fn test_scores(
    tensor: &ScoreTensor,
    test_index: usize,
    k: usize,
) -> Result<Vec<f64>, MethodError> {
    if test_index >= tensor.test_count() {
        return Err(MethodError::TestIndexOutOfRange {
            index: test_index,
            count: tensor.test_count(),
        });
    }
    let n = tensor.n();
    if n < k {
        return Err(MethodError::PoolTooSmall { pool: n, k });
    }
    let mut pool = Vec::with_capacity(n);
    (0..tensor.label_count())
        .map(|y| {
            pool.clear();
            pool.extend((0..n).map(|j| tensor.test_score(test_index, j, y)));
            Ok(agg::min_sum_k(&pool, k)?)
        })
        .collect()
}

/// Prediction set for one test input under an existing calibration.
pub fn predict(
    tensor: &ScoreTensor,
    test_index: usize,
    calibration: &CalibrationResult,
) -> Result<PredictionSet, MethodError> {
    if calibration.n != tensor.n() {
        return Err(MethodError::CalibrationMismatch {
            expected: calibration.n,
            found: tensor.n(),
        });
    }
    let scores = test_scores(tensor, test_index, calibration.k)?;
    Ok(PredictionSet::from_scores(scores, calibration.threshold))
}

pub(crate) fn check_pool(pool: usize, k: usize) -> Result<(), MethodError> {
    if k == 0 {
        return Err(MethodError::Aggregate(AggregateError::ZeroK));
    }
    if pool < k {
        return Err(MethodError::PoolTooSmall { pool, k });
    }
    Ok(())
}
