//! Full-conformal variant of the aggregated one-shot method.
//!
//! For every candidate label `y` of a test input, the calibration pool of
//! example `i` is augmented with the score assigned to `(X_i, Y_i)` by the
//! predictor induced by the hypothetical pair `(X_test, y)`, and the
//! self-score `p(i, i)` is removed by multiset difference:
//!
//! ```text
//! S~_i(y) = min_sum_k(({ p(i, j) : all j } + { full(t, y, i) }) - { p(i, i) })
//! ```
//!
//! Each label is thresholded against its own conformal quantile. The
//! construction is quadratically more expensive than the leave-one-out
//! method and exists as an analytical device: its sets are provably
//! contained in the leave-one-out sets, which is how the coverage guarantee
//! transfers. It still works fine as a standalone (if slow) method.

use crate::agg::{self, ScorePool};
use crate::caos::{self, MethodError};
use crate::tensor::ScoreTensor;

/// Full-conformal prediction for one test input: per-label aggregated test
/// scores, per-label thresholds, and the resulting members.
#[derive(Debug, Clone, PartialEq)]
pub struct FullPrediction {
    members: Vec<usize>,
    test_scores: Vec<f64>,
    thresholds: Vec<f64>,
}

impl FullPrediction {
    /// Build from per-label test scores and thresholds; label `y` is a
    /// member when `test_scores[y] <= thresholds[y]`.
    pub fn from_parts(test_scores: Vec<f64>, thresholds: Vec<f64>) -> Self {
        assert_eq!(test_scores.len(), thresholds.len());
        from_scores(test_scores, thresholds)
    }

    /// Member labels, ascending.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.members.binary_search(&label).is_ok()
    }

    /// Aggregated test score per label; identical to the scores the
    /// leave-one-out method computes for the same test input.
    pub fn test_scores(&self) -> &[f64] {
        &self.test_scores
    }

    /// Conformal threshold per label.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }
}

/// Augmented calibration scores for candidate label `y` of test input
/// `test_index`.
///
/// Built literally per the definition: the full score row of example `i`
/// (self-score included) plus the hypothetical predictor's score, then one
/// occurrence of the self-score removed. This equals aggregating
/// `{ p(i, j) : j != i } + { full(t, y, i) }` directly; a unit test pins
/// that equivalence.
pub fn calibration_scores(
    tensor: &ScoreTensor,
    test_index: usize,
    y: usize,
    k: usize,
) -> Result<Vec<f64>, MethodError> {
    if !tensor.has_full() {
        return Err(MethodError::FullBlockMissing);
    }
    if test_index >= tensor.test_count() {
        return Err(MethodError::TestIndexOutOfRange {
            index: test_index,
            count: tensor.test_count(),
        });
    }
    let n = tensor.n();
    caos::check_pool(n.saturating_sub(1), k)?;
    (0..n)
        .map(|i| {
            let mut pool: ScorePool = tensor.p_row(i).iter().copied().collect();
            pool.insert(tensor.full_score(test_index, y, i));
            let removed = pool.remove_one(tensor.p(i, i));
            debug_assert!(removed, "self-score must be present in its own row");
            Ok(pool.min_sum_k(k)?)
        })
        .collect()
}

/// Full-conformal prediction set for one test input.
///
/// Test scores are computed exactly as in the leave-one-out method (the
/// hypothetical predictor's self-score enters the pool and is immediately
/// removed again, leaving the plain n-predictor pool), so the two methods
/// agree bit-for-bit on test scores and differ only in thresholds.
pub fn predict(
    tensor: &ScoreTensor,
    test_index: usize,
    alpha: f64,
    k: usize,
) -> Result<FullPrediction, MethodError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MethodError::InvalidAlpha { alpha });
    }
    let test_scores = caos::test_scores(tensor, test_index, k)?;
    let thresholds = label_thresholds(tensor, test_index, alpha, k)?;
    Ok(from_scores(test_scores, thresholds))
}

/// Per-label conformal thresholds for one test input.
pub fn label_thresholds(
    tensor: &ScoreTensor,
    test_index: usize,
    alpha: f64,
    k: usize,
) -> Result<Vec<f64>, MethodError> {
    let level = agg::calibration_level(alpha, tensor.n());
    (0..tensor.label_count())
        .map(|y| {
            let scores = calibration_scores(tensor, test_index, y, k)?;
            Ok(agg::conformal_quantile(&scores, level)?)
        })
        .collect()
}

fn from_scores(test_scores: Vec<f64>, thresholds: Vec<f64>) -> FullPrediction {
    let members = test_scores
        .iter()
        .zip(&thresholds)
        .enumerate()
        .filter(|(_, (score, threshold))| score <= threshold)
        .map(|(y, _)| y)
        .collect();
    FullPrediction {
        members,
        test_scores,
        thresholds,
    }
}
