//! Reference implementations used as independent oracles.
//!
//! These deliberately re-derive everything from scratch: pools are built
//! element by element, aggregation is a full sort followed by a prefix sum,
//! and quantiles index into a sorted copy. Nothing here shares code with
//! the optimized modules beyond the core tensor and set types, so agreement
//! between the two routes is meaningful evidence, not a tautology.

use crate::caos::{MethodError, PredictionSet};
use crate::full::FullPrediction;
use crate::tensor::ScoreTensor;

fn sum_of_k_smallest(pool: &[f64], k: usize) -> f64 {
    let mut sorted = pool.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[..k].iter().sum()
}

fn quantile_by_sorting(scores: &[f64], level: f64) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((level * sorted.len() as f64).ceil() as usize)
        .min(sorted.len())
        .max(1);
    sorted[rank - 1]
}

/// Remove one occurrence of `value` (exact equality), mirroring multiset
/// difference.
fn remove_one_occurrence(pool: &mut Vec<f64>, value: f64) {
    if let Some(pos) = pool.iter().position(|&v| v == value) {
        pool.remove(pos);
    }
}

/// Literal restatement of the leave-one-out aggregated method.
pub fn naive_caos(
    tensor: &ScoreTensor,
    alpha: f64,
    k: usize,
    test_index: usize,
) -> Result<PredictionSet, MethodError> {
    let n = tensor.n();
    if n < k + 1 {
        return Err(MethodError::PoolTooSmall {
            pool: n.saturating_sub(1),
            k,
        });
    }
    if test_index >= tensor.test_count() {
        return Err(MethodError::TestIndexOutOfRange {
            index: test_index,
            count: tensor.test_count(),
        });
    }
    let mut calibration_scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut pool = Vec::with_capacity(n - 1);
        for j in 0..n {
            if j != i {
                pool.push(tensor.p(i, j));
            }
        }
        calibration_scores.push(sum_of_k_smallest(&pool, k));
    }
    let level = (1.0 - alpha) * (1.0 + 1.0 / n as f64);
    let threshold = quantile_by_sorting(&calibration_scores, level);

    let mut label_scores = Vec::with_capacity(tensor.label_count());
    for y in 0..tensor.label_count() {
        let pool: Vec<f64> = (0..n)
            .map(|j| tensor.test_score(test_index, j, y))
            .collect();
        label_scores.push(sum_of_k_smallest(&pool, k));
    }
    Ok(PredictionSet::from_scores(label_scores, threshold))
}

/// Literal restatement of the full-conformal variant: for every candidate
/// label, build the augmented pools (self-score included, then removed by
/// multiset difference) and threshold each label at its own quantile.
pub fn naive_full_caos(
    tensor: &ScoreTensor,
    alpha: f64,
    k: usize,
    test_index: usize,
) -> Result<FullPrediction, MethodError> {
    if !tensor.has_full() {
        return Err(MethodError::FullBlockMissing);
    }
    let n = tensor.n();
    if n < k + 1 {
        return Err(MethodError::PoolTooSmall {
            pool: n.saturating_sub(1),
            k,
        });
    }
    if test_index >= tensor.test_count() {
        return Err(MethodError::TestIndexOutOfRange {
            index: test_index,
            count: tensor.test_count(),
        });
    }
    let level = (1.0 - alpha) * (1.0 + 1.0 / n as f64);
    let label_count = tensor.label_count();
    let mut thresholds = Vec::with_capacity(label_count);
    let mut test_scores = Vec::with_capacity(label_count);
    for y in 0..label_count {
        let mut augmented_scores = Vec::with_capacity(n);
        for i in 0..n {
            // The augmented dataset scores (X_i, Y_i) with all n predictors
            // plus the hypothetical one, minus one copy of the self-score.
            let mut pool: Vec<f64> = (0..n).map(|j| tensor.p(i, j)).collect();
            pool.push(tensor.full_score(test_index, y, i));
            remove_one_occurrence(&mut pool, tensor.p(i, i));
            augmented_scores.push(sum_of_k_smallest(&pool, k));
        }
        thresholds.push(quantile_by_sorting(&augmented_scores, level));

        // For the test pair the augmented pool contains the n predictor
        // scores plus the hypothetical predictor's self-score, which the
        // multiset difference removes again.
        let pool: Vec<f64> = (0..n)
            .map(|j| tensor.test_score(test_index, j, y))
            .collect();
        test_scores.push(sum_of_k_smallest(&pool, k));
    }
    Ok(FullPrediction::from_parts(test_scores, thresholds))
}
