//! Split conformal one-shot prediction and the data-reuse variants.
//!
//! The split baseline holds the dataset apart: reference examples induce
//! predictors, calibration examples supply the scores that set each
//! predictor's threshold. For a fixed reference `i` the calibration scores
//! are `{ p(j, i) : j in calibration }`, the threshold is their conformal
//! quantile at level `(1 - alpha) * (1 + 1/|cal|)`, and the prediction set
//! keeps labels scoring at most the threshold under predictor `i` alone.
//!
//! The split variants of the aggregated method (`split_caos`) keep min-sum-k
//! aggregation but restrict which examples calibrate and which serve as the
//! reference pool, which is how the contribution of data reuse is isolated
//! from the contribution of aggregation.

use thiserror::Error;

use crate::agg;
use crate::caos::{calibrate_from_scores, CalibrationResult, MethodError, PredictionSet};
use crate::config::Method;
use crate::provider::ScoreProvider;
use crate::tensor::ScoreTensor;

/// Errors raised when constructing a [`SplitSpec`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("{side} split must not be empty")]
    EmptySide { side: &'static str },
    #[error("index {index} appears in both splits")]
    Overlap { index: usize },
    #[error("index {index} out of range for dataset of size {n}")]
    OutOfRange { index: usize, n: usize },
    #[error("splits cover {covered} of {n} examples; they must partition the dataset")]
    Incomplete { covered: usize, n: usize },
}

/// A partition of example indices `0..n` into a reference set and a
/// disjoint calibration set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    reference: Vec<usize>,
    calibration: Vec<usize>,
}

impl SplitSpec {
    /// Validate that `reference` and `calibration` partition `0..n`.
    pub fn new(
        reference: Vec<usize>,
        calibration: Vec<usize>,
        n: usize,
    ) -> Result<Self, SplitError> {
        if reference.is_empty() {
            return Err(SplitError::EmptySide { side: "reference" });
        }
        if calibration.is_empty() {
            return Err(SplitError::EmptySide {
                side: "calibration",
            });
        }
        let mut seen = vec![false; n];
        for &index in reference.iter().chain(&calibration) {
            if index >= n {
                return Err(SplitError::OutOfRange { index, n });
            }
            if seen[index] {
                return Err(SplitError::Overlap { index });
            }
            seen[index] = true;
        }
        let covered = seen.iter().filter(|&&s| s).count();
        if covered != n {
            return Err(SplitError::Incomplete { covered, n });
        }
        Ok(Self {
            reference,
            calibration,
        })
    }

    /// Deterministic split by fraction: the first `round(n * ref_fraction)`
    /// indices become references, the rest calibrate. Both sides are kept
    /// nonempty.
    pub fn by_fraction(n: usize, ref_fraction: f64) -> Result<Self, SplitError> {
        if n < 2 {
            return Err(SplitError::Incomplete { covered: n, n: 2 });
        }
        let raw = (n as f64 * ref_fraction).round() as usize;
        let ref_size = raw.clamp(1, n - 1);
        Self::new((0..ref_size).collect(), (ref_size..n).collect(), n)
    }

    /// The default even split.
    pub fn halves(n: usize) -> Result<Self, SplitError> {
        Self::by_fraction(n, 0.5)
    }

    pub fn reference(&self) -> &[usize] {
        &self.reference
    }

    pub fn calibration(&self) -> &[usize] {
        &self.calibration
    }

    pub fn contains_reference(&self, index: usize) -> bool {
        self.reference.contains(&index)
    }
}

/// Calibrate the one-shot predictor induced by `ref_id` on the calibration
/// split.
pub fn calibrate(
    tensor: &ScoreTensor,
    split: &SplitSpec,
    ref_id: usize,
    alpha: f64,
) -> Result<CalibrationResult, MethodError> {
    if !split.contains_reference(ref_id) {
        return Err(MethodError::RefNotInSplit { ref_id });
    }
    let scores: Vec<f64> = split
        .calibration()
        .iter()
        .map(|&j| tensor.p(j, ref_id))
        .collect();
    calibrate_from_scores(Method::Scos, scores, alpha, 1)
}

/// Prediction set for one test input under a single calibrated predictor.
pub fn predict(
    tensor: &ScoreTensor,
    test_index: usize,
    ref_id: usize,
    calibration: &CalibrationResult,
) -> Result<PredictionSet, MethodError> {
    if test_index >= tensor.test_count() {
        return Err(MethodError::TestIndexOutOfRange {
            index: test_index,
            count: tensor.test_count(),
        });
    }
    if ref_id >= tensor.n() {
        return Err(MethodError::ExampleOutOfRange {
            index: ref_id,
            n: tensor.n(),
        });
    }
    let scores: Vec<f64> = (0..tensor.label_count())
        .map(|y| tensor.test_score(test_index, ref_id, y))
        .collect();
    Ok(PredictionSet::from_scores(scores, calibration.threshold))
}

/// Per-test coverage and mean size, averaged over every reference predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageReport {
    /// Mean set size per test input (averaged over references).
    pub mean_size: Vec<f64>,
    /// Fraction of references whose set covers the truth, per test input.
    pub coverage: Vec<f64>,
    /// Grand mean size over (reference, test) pairs.
    pub overall_size: f64,
    /// Grand coverage over (reference, test) pairs.
    pub overall_coverage: f64,
}

/// Evaluate every reference predictor on every test point and average over
/// (reference, test) pairs. Requires truth labels.
pub fn average_report(
    tensor: &ScoreTensor,
    split: &SplitSpec,
    alpha: f64,
) -> Result<AverageReport, MethodError> {
    let truth = tensor.truth().ok_or(MethodError::MissingTruth)?;
    let sets = all_reference_sets(tensor, split, alpha)?;
    let test_count = tensor.test_count();
    let ref_count = split.reference().len() as f64;
    let mut mean_size = vec![0.0; test_count];
    let mut coverage = vec![0.0; test_count];
    for per_test in &sets {
        for (t, set) in per_test.iter().enumerate() {
            mean_size[t] += set.size() as f64;
            coverage[t] += f64::from(set.contains(truth[t]));
        }
    }
    for t in 0..test_count {
        mean_size[t] /= ref_count;
        coverage[t] /= ref_count;
    }
    let overall_size = mean_size.iter().sum::<f64>() / test_count.max(1) as f64;
    let overall_coverage = coverage.iter().sum::<f64>() / test_count.max(1) as f64;
    Ok(AverageReport {
        mean_size,
        coverage,
        overall_size,
        overall_coverage,
    })
}

/// Prediction sets for every reference: `sets[r][t]` is reference
/// `split.reference()[r]` applied to test input `t`.
pub fn all_reference_sets(
    tensor: &ScoreTensor,
    split: &SplitSpec,
    alpha: f64,
) -> Result<Vec<Vec<PredictionSet>>, MethodError> {
    split
        .reference()
        .iter()
        .map(|&ref_id| {
            let calibration = calibrate(tensor, split, ref_id, alpha)?;
            (0..tensor.test_count())
                .map(|t| predict(tensor, t, ref_id, &calibration))
                .collect()
        })
        .collect()
}

/// Per-label scores on calibration inputs: `score(j, i, y)` is the score the
/// predictor induced by example `i` assigns to candidate label `y` for the
/// *input* of example `j`.
///
/// The score tensor only sweeps labels for test inputs, so selecting a
/// reference by the size of its sets on calibration data needs this extra
/// block. It is available wherever the underlying provider is (synthetic
/// tasks, or any caller that can still evaluate the model).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSweep {
    n: usize,
    label_count: usize,
    scores: Vec<f64>,
}

impl CalibrationSweep {
    /// Evaluate `provider` on every (target example, reference example,
    /// candidate label) triple of the calibration dataset.
    pub fn materialize<P: ScoreProvider>(provider: &P, calib: &[(P::Input, usize)]) -> Self {
        let n = calib.len();
        let label_count = provider.label_count();
        let mut scores = vec![0.0; n * n * label_count];
        for (j, (target, _)) in calib.iter().enumerate() {
            for (i, (reference, reference_label)) in calib.iter().enumerate() {
                for y in 0..label_count {
                    scores[(j * n + i) * label_count + y] =
                        provider.score((reference, *reference_label), target, y);
                }
            }
        }
        Self {
            n,
            label_count,
            scores,
        }
    }

    /// Build from a closure; mostly for tests.
    pub fn from_fn(
        n: usize,
        label_count: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut scores = vec![0.0; n * n * label_count];
        for j in 0..n {
            for i in 0..n {
                for y in 0..label_count {
                    scores[(j * n + i) * label_count + y] = f(j, i, y);
                }
            }
        }
        Self {
            n,
            label_count,
            scores,
        }
    }

    pub fn score(&self, target: usize, reference: usize, y: usize) -> f64 {
        self.scores[(target * self.n + reference) * self.label_count + y]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }
}

/// Select the reference whose calibrated predictor yields the smallest
/// prediction sets on the calibration inputs, in sample: the threshold is
/// fitted on the full calibration split and the sets are measured on those
/// same calibration examples. Ties go to the smallest reference index.
///
/// Selection on calibration data voids the coverage guarantee; report rows
/// for this method carry the corresponding flag.
pub fn best_select(
    tensor: &ScoreTensor,
    split: &SplitSpec,
    alpha: f64,
    sweep: &CalibrationSweep,
) -> Result<usize, MethodError> {
    let mut best: Option<(usize, f64)> = None;
    for &ref_id in split.reference() {
        let calibration = calibrate(tensor, split, ref_id, alpha)?;
        let mut total = 0usize;
        for &j in split.calibration() {
            for y in 0..tensor.label_count() {
                if sweep.score(j, ref_id, y) <= calibration.threshold {
                    total += 1;
                }
            }
        }
        let average = total as f64 / split.calibration().len() as f64;
        // Strict comparison keeps the smallest index on ties.
        if best.is_none_or(|(_, size)| average < size) {
            best = Some((ref_id, average));
        }
    }
    Ok(best.expect("reference split is nonempty").0)
}

/// Outcome of the hindsight oracle for one test input.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePick {
    /// Chosen reference.
    pub ref_id: usize,
    /// The chosen set.
    pub set: PredictionSet,
    /// True when no single-source set contained the truth and the smallest
    /// set was returned instead.
    pub fallback: bool,
}

/// Hindsight oracle: the smallest single-source set containing the true
/// label (ties to the smallest reference index). When no set contains the
/// truth, the overall smallest set is returned and flagged.
pub fn oracle_predict(
    tensor: &ScoreTensor,
    split: &SplitSpec,
    alpha: f64,
    test_index: usize,
    true_label: usize,
) -> Result<OraclePick, MethodError> {
    let mut candidates = Vec::with_capacity(split.reference().len());
    for &ref_id in split.reference() {
        let calibration = calibrate(tensor, split, ref_id, alpha)?;
        candidates.push((ref_id, predict(tensor, test_index, ref_id, &calibration)?));
    }
    Ok(oracle_pick(candidates, true_label))
}

/// Pick among per-reference sets; factored out so batched callers can reuse
/// precomputed sets.
pub(crate) fn oracle_pick(
    candidates: Vec<(usize, PredictionSet)>,
    true_label: usize,
) -> OraclePick {
    debug_assert!(!candidates.is_empty());
    let mut covering: Option<(usize, PredictionSet)> = None;
    let mut smallest: Option<(usize, PredictionSet)> = None;
    for (ref_id, set) in candidates {
        if smallest.as_ref().is_none_or(|(_, s)| set.size() < s.size()) {
            smallest = Some((ref_id, set.clone()));
        }
        if set.contains(true_label) && covering.as_ref().is_none_or(|(_, s)| set.size() < s.size())
        {
            covering = Some((ref_id, set));
        }
    }
    match covering {
        Some((ref_id, set)) => OraclePick {
            ref_id,
            set,
            fallback: false,
        },
        None => {
            let (ref_id, set) = smallest.expect("candidates nonempty");
            OraclePick {
                ref_id,
                set,
                fallback: true,
            }
        }
    }
}

/// Data-reuse variants of the aggregated method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitVariant {
    /// Calibrate on the calibration split; reference pool is the reference
    /// split. The fully split protocol.
    RefAndCal,
    /// Calibrate on the calibration split; reference pool is the whole
    /// dataset.
    CalOnly,
    /// Calibrate on the whole dataset; reference pool is the reference
    /// split.
    RefOnly,
}

impl SplitVariant {
    pub fn method(self) -> Method {
        match self {
            SplitVariant::RefAndCal => Method::SplitCaosRefCal,
            SplitVariant::CalOnly => Method::SplitCaosCal,
            SplitVariant::RefOnly => Method::SplitCaosRef,
        }
    }
}

/// Aggregated calibration and prediction with explicit calibration and
/// reference index sets.
///
/// Calibration example `j` aggregates the `k` smallest of
/// `{ p(j, i) : i in refs, i != j }`: an example that is itself a member of
/// the reference pool never uses its self-induced predictor. Prediction
/// always uses the full stated reference pool.
pub fn split_caos(
    tensor: &ScoreTensor,
    calibration_ids: &[usize],
    reference_ids: &[usize],
    alpha: f64,
    k: usize,
    method: Method,
) -> Result<(CalibrationResult, Vec<PredictionSet>), MethodError> {
    for &index in calibration_ids.iter().chain(reference_ids) {
        if index >= tensor.n() {
            return Err(MethodError::ExampleOutOfRange {
                index,
                n: tensor.n(),
            });
        }
    }
    let mut pool = Vec::with_capacity(reference_ids.len());
    let scores = calibration_ids
        .iter()
        .map(|&j| {
            pool.clear();
            pool.extend(
                reference_ids
                    .iter()
                    .filter(|&&i| i != j)
                    .map(|&i| tensor.p(j, i)),
            );
            if pool.len() < k {
                return Err(MethodError::PoolTooSmall {
                    pool: pool.len(),
                    k,
                });
            }
            Ok(agg::min_sum_k(&pool, k)?)
        })
        .collect::<Result<Vec<f64>, MethodError>>()?;
    let calibration = calibrate_from_scores(method, scores, alpha, k)?;

    if reference_ids.len() < k {
        return Err(MethodError::PoolTooSmall {
            pool: reference_ids.len(),
            k,
        });
    }
    let mut test_pool = Vec::with_capacity(reference_ids.len());
    let sets = (0..tensor.test_count())
        .map(|t| {
            let scores = (0..tensor.label_count())
                .map(|y| {
                    test_pool.clear();
                    test_pool.extend(reference_ids.iter().map(|&i| tensor.test_score(t, i, y)));
                    Ok(agg::min_sum_k(&test_pool, k)?)
                })
                .collect::<Result<Vec<f64>, MethodError>>()?;
            Ok(PredictionSet::from_scores(scores, calibration.threshold))
        })
        .collect::<Result<Vec<PredictionSet>, MethodError>>()?;
    Ok((calibration, sets))
}

/// Run one data-reuse variant against a reference/calibration split.
pub fn split_caos_variant(
    tensor: &ScoreTensor,
    split: &SplitSpec,
    alpha: f64,
    k: usize,
    variant: SplitVariant,
) -> Result<(CalibrationResult, Vec<PredictionSet>), MethodError> {
    let everything: Vec<usize> = (0..tensor.n()).collect();
    let (calibration_ids, reference_ids): (&[usize], &[usize]) = match variant {
        SplitVariant::RefAndCal => (split.calibration(), split.reference()),
        SplitVariant::CalOnly => (split.calibration(), &everything),
        SplitVariant::RefOnly => (&everything, split.reference()),
    };
    split_caos(
        tensor,
        calibration_ids,
        reference_ids,
        alpha,
        k,
        variant.method(),
    )
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::caos;
    use crate::label::LabelSpace;

    fn tensor(n: usize, t: usize, l: usize, seed: u64, truth: Option<Vec<usize>>) -> ScoreTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let test = (0..t * n * l).map(|_| rng.random_range(0.0..1.0)).collect();
        ScoreTensor::from_parts(n, t, LabelSpace::new(l).unwrap(), p, test, None, truth).unwrap()
    }

    #[test]
    fn split_spec_validates_partitions() {
        assert!(SplitSpec::new(vec![0, 1], vec![2, 3], 4).is_ok());
        assert_eq!(
            SplitSpec::new(vec![0], vec![0, 1], 2).unwrap_err(),
            SplitError::Overlap { index: 0 }
        );
        assert_eq!(
            SplitSpec::new(vec![0], vec![1], 3).unwrap_err(),
            SplitError::Incomplete { covered: 2, n: 3 }
        );
        assert_eq!(
            SplitSpec::new(vec![], vec![0], 1).unwrap_err(),
            SplitError::EmptySide { side: "reference" }
        );
    }

    #[test]
    fn fraction_split_is_deterministic_and_covers() {
        let split = SplitSpec::by_fraction(7, 0.5).unwrap();
        assert_eq!(split.reference(), &[0, 1, 2, 3]);
        assert_eq!(split.calibration(), &[4, 5, 6]);
    }

    /// Four calibration scores (10, 20, 30, 40) at alpha = 0.5: level
    /// 0.5 * 1.25 = 0.625, rank 3, threshold 30.
    #[test]
    fn worked_calibration_example() {
        let n = 5;
        let mut p = vec![0.0; n * n];
        for (row, value) in [(1usize, 10.0), (2, 20.0), (3, 30.0), (4, 40.0)] {
            p[row * n] = value; // column 0 = predictor induced by example 0
        }
        let tensor =
            ScoreTensor::from_parts(n, 0, LabelSpace::new(2).unwrap(), p, vec![], None, None)
                .unwrap();
        let split = SplitSpec::new(vec![0], vec![1, 2, 3, 4], n).unwrap();
        let calibration = calibrate(&tensor, &split, 0, 0.5).unwrap();
        assert_eq!(calibration.threshold, 30.0);
    }

    #[test]
    fn constant_calibration_scores_threshold_at_the_constant() {
        let n = 4;
        let mut p = vec![0.0; n * n];
        for row in 1..n {
            p[row * n] = 0.7;
        }
        let tensor =
            ScoreTensor::from_parts(n, 0, LabelSpace::new(2).unwrap(), p, vec![], None, None)
                .unwrap();
        let split = SplitSpec::new(vec![0], (1..n).collect(), n).unwrap();
        for alpha in [0.05, 0.3, 0.8] {
            assert_eq!(calibrate(&tensor, &split, 0, alpha).unwrap().threshold, 0.7);
        }
    }

    #[test]
    fn calibrate_rejects_foreign_reference() {
        let tensor = tensor(4, 1, 2, 1, None);
        let split = SplitSpec::halves(4).unwrap();
        assert_eq!(
            calibrate(&tensor, &split, 3, 0.1).unwrap_err(),
            MethodError::RefNotInSplit { ref_id: 3 }
        );
    }

    /// Random split and tensor against a direct loop over calibration
    /// examples.
    #[test]
    fn calibration_matches_direct_recomputation() {
        let tensor = tensor(9, 1, 3, 7, None);
        let split = SplitSpec::by_fraction(9, 0.4).unwrap();
        for &ref_id in split.reference() {
            let calibration = calibrate(&tensor, &split, ref_id, 0.2).unwrap();
            let mut scores: Vec<f64> = split
                .calibration()
                .iter()
                .map(|&j| tensor.p(j, ref_id))
                .collect();
            scores.sort_by(f64::total_cmp);
            let level = 0.8 * (1.0 + 1.0 / scores.len() as f64);
            let rank = ((level * scores.len() as f64).ceil() as usize).min(scores.len());
            assert_eq!(calibration.threshold, scores[rank - 1]);
        }
    }

    #[test]
    fn prediction_includes_threshold_ties() {
        let n = 2;
        let l = 3;
        let test = vec![0.4, 0.5, 0.6, 9.0, 9.0, 9.0];
        let tensor = ScoreTensor::from_parts(
            n,
            1,
            LabelSpace::new(l).unwrap(),
            vec![0.0; 4],
            test,
            None,
            None,
        )
        .unwrap();
        let calibration = CalibrationResult {
            method: Method::Scos,
            scores: vec![0.5],
            level: 1.0,
            threshold: 0.5,
            alpha: 0.5,
            k: 1,
            n: 1,
        };
        let set = predict(&tensor, 0, 0, &calibration).unwrap();
        assert_eq!(set.members(), &[0, 1]);
        let below_all = CalibrationResult {
            threshold: 0.1,
            ..calibration
        };
        let empty = predict(&tensor, 0, 0, &below_all).unwrap();
        assert_eq!(empty.members(), &[] as &[usize]);
    }

    #[test]
    fn average_report_requires_truth() {
        let tensor = tensor(6, 2, 3, 3, None);
        let split = SplitSpec::halves(6).unwrap();
        assert_eq!(
            average_report(&tensor, &split, 0.2).unwrap_err(),
            MethodError::MissingTruth
        );
    }

    #[test]
    fn single_reference_average_is_that_references_report() {
        let tensor = tensor(5, 3, 4, 13, Some(vec![0, 1, 2]));
        let split = SplitSpec::new(vec![0], (1..5).collect(), 5).unwrap();
        let report = average_report(&tensor, &split, 0.3).unwrap();
        let calibration = calibrate(&tensor, &split, 0, 0.3).unwrap();
        for t in 0..3 {
            let set = predict(&tensor, t, 0, &calibration).unwrap();
            assert_eq!(report.mean_size[t], set.size() as f64);
            let truth = tensor.truth().unwrap()[t];
            assert_eq!(report.coverage[t], f64::from(set.contains(truth)));
        }
    }

    /// Two references whose sets have sizes 2 and 4 on every test point
    /// average to 3.
    #[test]
    fn average_size_is_the_arithmetic_mean() {
        let n = 4;
        let l = 5;
        let t_count = 2;
        // Reference 0 admits labels {0, 1}; reference 1 admits {0, 1, 2, 3}.
        let mut test = vec![9.0; t_count * n * l];
        for t in 0..t_count {
            for y in 0..2 {
                test[(t * n) * l + y] = 0.0;
            }
            for y in 0..4 {
                test[(t * n + 1) * l + y] = 0.0;
            }
        }
        // Calibration scores put both thresholds at 0.5.
        let mut p = vec![0.0; n * n];
        for row in 2..n {
            p[row * n] = 0.5;
            p[row * n + 1] = 0.5;
        }
        let tensor = ScoreTensor::from_parts(
            n,
            t_count,
            LabelSpace::new(l).unwrap(),
            p,
            test,
            None,
            Some(vec![0, 0]),
        )
        .unwrap();
        let split = SplitSpec::new(vec![0, 1], vec![2, 3], n).unwrap();
        let report = average_report(&tensor, &split, 0.5).unwrap();
        assert_eq!(report.overall_size, 3.0);
        assert_eq!(report.overall_coverage, 1.0);
    }

    /// Reference-major and test-major accumulation must agree.
    #[test]
    fn average_report_matches_swapped_loop_order() {
        let tensor = tensor(8, 4, 3, 23, Some(vec![0, 1, 2, 0]));
        let split = SplitSpec::halves(8).unwrap();
        let report = average_report(&tensor, &split, 0.25).unwrap();
        let truth = tensor.truth().unwrap();
        let sets = all_reference_sets(&tensor, &split, 0.25).unwrap();
        let mut size_sum = 0.0;
        let mut cover_sum = 0.0;
        for t in 0..4 {
            for per_test in &sets {
                size_sum += per_test[t].size() as f64;
                cover_sum += f64::from(per_test[t].contains(truth[t]));
            }
        }
        let pairs = (4 * split.reference().len()) as f64;
        assert!((report.overall_size - size_sum / pairs).abs() < 1e-12);
        assert!((report.overall_coverage - cover_sum / pairs).abs() < 1e-12);
    }

    #[test]
    fn best_select_prefers_dominating_reference() {
        let n = 6;
        let l = 4;
        // Build P so that reference 1's calibration scores are small and its
        // sweep scores separate sharply; reference 0 admits everything.
        let mut p = vec![0.0; n * n];
        for j in 3..n {
            p[j * n] = 0.9;
            p[j * n + 1] = 0.2;
            p[j * n + 2] = 0.9;
        }
        let tensor =
            ScoreTensor::from_parts(n, 0, LabelSpace::new(l).unwrap(), p, vec![], None, None)
                .unwrap();
        let split = SplitSpec::new(vec![0, 1, 2], vec![3, 4, 5], n).unwrap();
        // Sweep: reference 1 admits one label per example; others admit all.
        let sweep = CalibrationSweep::from_fn(n, l, |j, i, y| {
            if i == 1 {
                if y == j % l {
                    0.1
                } else {
                    0.8
                }
            } else {
                0.0
            }
        });
        assert_eq!(best_select(&tensor, &split, 0.2, &sweep).unwrap(), 1);
    }

    #[test]
    fn best_select_breaks_ties_by_smallest_index() {
        let tensor = tensor(6, 0, 3, 31, None);
        let split = SplitSpec::halves(6).unwrap();
        // Identical sweep scores for every reference make all averages equal.
        let sweep = CalibrationSweep::from_fn(6, 3, |_, _, _| 0.42);
        assert_eq!(best_select(&tensor, &split, 0.2, &sweep).unwrap(), 0);
    }

    /// Exhaustive oracle: recompute every reference's average set size the
    /// long way and compare the argmin.
    #[test]
    fn best_select_matches_exhaustive_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for round in 0..10 {
            let n = 8;
            let l = 4;
            let tensor = tensor(n, 0, l, 100 + round, None);
            let split = SplitSpec::halves(n).unwrap();
            let sweep_values: Vec<f64> =
                (0..n * n * l).map(|_| rng.random_range(0.0..1.0)).collect();
            let sweep =
                CalibrationSweep::from_fn(n, l, |j, i, y| sweep_values[(j * n + i) * l + y]);
            let chosen = best_select(&tensor, &split, 0.3, &sweep).unwrap();
            let mut best_ref = None;
            let mut best_avg = f64::INFINITY;
            for &ref_id in split.reference() {
                let calibration = calibrate(&tensor, &split, ref_id, 0.3).unwrap();
                let mut sizes = 0usize;
                for &j in split.calibration() {
                    for y in 0..l {
                        if sweep.score(j, ref_id, y) <= calibration.threshold {
                            sizes += 1;
                        }
                    }
                }
                let avg = sizes as f64 / split.calibration().len() as f64;
                if avg < best_avg {
                    best_avg = avg;
                    best_ref = Some(ref_id);
                }
            }
            assert_eq!(chosen, best_ref.unwrap());
        }
    }

    #[test]
    fn oracle_takes_the_covering_set_regardless_of_size() {
        let sets = vec![
            (0, PredictionSet::from_scores(vec![0.0, 9.0, 9.0], 0.5)),
            (1, PredictionSet::from_scores(vec![0.0, 0.0, 0.0], 0.5)),
        ];
        // Only reference 0's singleton {0}... contains truth 0; reference 1
        // contains it too but is larger, so the singleton wins.
        let pick = oracle_pick(sets, 0);
        assert_eq!(pick.ref_id, 0);
        assert!(!pick.fallback);
        // Truth 1: only the full set contains it.
        let sets = vec![
            (0, PredictionSet::from_scores(vec![0.0, 9.0, 9.0], 0.5)),
            (1, PredictionSet::from_scores(vec![0.0, 0.0, 0.0], 0.5)),
        ];
        let pick = oracle_pick(sets, 1);
        assert_eq!(pick.ref_id, 1);
        assert!(!pick.fallback);
    }

    #[test]
    fn oracle_picks_smallest_covering_set() {
        let make = |size: usize| {
            let scores: Vec<f64> = (0..9).map(|y| if y < size { 0.0 } else { 9.0 }).collect();
            PredictionSet::from_scores(scores, 0.5)
        };
        let sets = vec![(0, make(5)), (1, make(2)), (2, make(9))];
        let pick = oracle_pick(sets, 0);
        assert_eq!(pick.ref_id, 1);
        assert_eq!(pick.set.size(), 2);
    }

    #[test]
    fn oracle_falls_back_to_smallest_when_nothing_covers() {
        let sets = vec![
            (0, PredictionSet::from_scores(vec![0.0, 0.0, 9.0], 0.5)),
            (1, PredictionSet::from_scores(vec![0.0, 9.0, 9.0], 0.5)),
        ];
        let pick = oracle_pick(sets, 2);
        assert!(pick.fallback);
        assert_eq!(pick.ref_id, 1);
        assert_eq!(pick.set.size(), 1);
    }

    #[test]
    fn oracle_covers_whenever_any_set_does() {
        let tensor = tensor(8, 5, 4, 53, Some(vec![0, 1, 2, 3, 0]));
        let split = SplitSpec::halves(8).unwrap();
        let truth = tensor.truth().unwrap().to_vec();
        for t in 0..5 {
            let pick = oracle_predict(&tensor, &split, 0.2, t, truth[t]).unwrap();
            let any_covers = all_reference_sets(&tensor, &split, 0.2)
                .unwrap()
                .iter()
                .any(|sets| sets[t].contains(truth[t]));
            assert_eq!(pick.set.contains(truth[t]), any_covers);
            assert_eq!(pick.fallback, !any_covers);
        }
    }

    /// With calibration set = reference pool = everything, the variant is
    /// definitionally the leave-one-out method.
    #[test]
    fn degenerate_variant_reduces_to_the_loo_method() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let n = 7;
        let l = 4;
        let p: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let test: Vec<f64> = (0..2 * n * l).map(|_| rng.random_range(0.0..1.0)).collect();
        let tensor =
            ScoreTensor::from_parts(n, 2, LabelSpace::new(l).unwrap(), p, test, None, None)
                .unwrap();
        let everything: Vec<usize> = (0..n).collect();
        let (calibration, sets) =
            split_caos(&tensor, &everything, &everything, 0.15, 2, Method::Caos).unwrap();
        let loo = caos::calibrate(&tensor, 0.15, 2).unwrap();
        assert_eq!(calibration.scores, loo.scores);
        assert_eq!(calibration.threshold, loo.threshold);
        for (t, set) in sets.iter().enumerate() {
            let expected = caos::predict(&tensor, t, &loo).unwrap();
            assert_eq!(set, &expected);
        }
    }

    /// A calibration example inside the reference pool must not see its own
    /// predictor: with the full dataset as pool its calibration pool has
    /// n - 1 members.
    #[test]
    fn overlapping_example_excludes_its_own_predictor() {
        let n = 5;
        let mut p = vec![0.5; n * n];
        for i in 0..n {
            p[i * n + i] = 0.0; // a self-score that would win if ever read
        }
        let tensor =
            ScoreTensor::from_parts(n, 0, LabelSpace::new(2).unwrap(), p, vec![], None, None)
                .unwrap();
        let split = SplitSpec::halves(n).unwrap();
        let (calibration, _) =
            split_caos_variant(&tensor, &split, 0.2, n - 1, SplitVariant::CalOnly).unwrap();
        // Pool size is exactly n - 1 = k, all entries 0.5.
        for score in &calibration.scores {
            assert_eq!(*score, 0.5 * (n - 1) as f64);
        }
        // k = n would need the self-score; it must error, not fall back.
        let err = split_caos_variant(&tensor, &split, 0.2, n, SplitVariant::CalOnly).unwrap_err();
        assert_eq!(err, MethodError::PoolTooSmall { pool: n - 1, k: n });
    }

    /// Naive pool reconstruction for each variant.
    #[test]
    fn variants_match_naive_pool_construction() {
        let tensor = tensor(8, 3, 4, 71, None);
        let split = SplitSpec::by_fraction(8, 0.5).unwrap();
        let everything: Vec<usize> = (0..8).collect();
        let alpha = 0.2;
        let k = 2;
        for variant in [
            SplitVariant::RefAndCal,
            SplitVariant::CalOnly,
            SplitVariant::RefOnly,
        ] {
            let (calibration, sets) =
                split_caos_variant(&tensor, &split, alpha, k, variant).unwrap();
            let (cal_ids, ref_ids): (Vec<usize>, Vec<usize>) = match variant {
                SplitVariant::RefAndCal => {
                    (split.calibration().to_vec(), split.reference().to_vec())
                }
                SplitVariant::CalOnly => (split.calibration().to_vec(), everything.clone()),
                SplitVariant::RefOnly => (everything.clone(), split.reference().to_vec()),
            };
            let naive_scores: Vec<f64> = cal_ids
                .iter()
                .map(|&j| {
                    let mut pool: Vec<f64> = ref_ids
                        .iter()
                        .filter(|&&i| i != j)
                        .map(|&i| tensor.p(j, i))
                        .collect();
                    pool.sort_by(f64::total_cmp);
                    pool[..k].iter().sum()
                })
                .collect();
            assert_eq!(calibration.scores, naive_scores);
            let mut sorted_scores = naive_scores.clone();
            sorted_scores.sort_by(f64::total_cmp);
            let level = (1.0 - alpha) * (1.0 + 1.0 / cal_ids.len() as f64);
            let rank = ((level * cal_ids.len() as f64).ceil() as usize).min(cal_ids.len());
            assert_eq!(calibration.threshold, sorted_scores[rank - 1]);
            for (t, set) in sets.iter().enumerate() {
                for y in 0..4 {
                    let mut pool: Vec<f64> = ref_ids
                        .iter()
                        .map(|&i| tensor.test_score(t, i, y))
                        .collect();
                    pool.sort_by(f64::total_cmp);
                    let score: f64 = pool[..k].iter().sum();
                    assert_eq!(set.contains(y), score <= calibration.threshold);
                }
            }
        }
    }
}
