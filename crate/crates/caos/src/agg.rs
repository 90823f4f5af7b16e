//! Multiset machinery: score pools, the min-sum-k aggregation operator and
//! the finite-sample conformal quantile.
//!
//! Everything here has pure value semantics and depends only on the multiset
//! of inputs, never on insertion order.

use thiserror::Error;

/// Errors for the aggregation operators.
#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("cannot aggregate the {k} smallest of a pool of size {len}")]
    PoolTooSmall { len: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("quantile of an empty score sequence")]
    EmptyScores,
    #[error("quantile level must be positive, got {level}")]
    NonPositiveLevel { level: f64 },
}

/// A finite multiset of real scores.
///
/// Removal takes out exactly one occurrence of a value, matching by exact
/// bitwise equality, and is a no-op when the value is absent; multiplicities
/// never go below zero. The algorithms only ever remove values previously
/// inserted from the same tensor, so representation equality is sound.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScorePool {
    values: Vec<f64>,
}

impl ScorePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            values: Vec::with_capacity(capacity),
        }
    }

    /// Number of members, counting multiplicity.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Insert one occurrence of `value`.
    pub fn insert(&mut self, value: f64) {
        self.values.push(value);
    }

    /// Remove one occurrence of `value`, if present. Returns whether a
    /// member was removed.
    pub fn remove_one(&mut self, value: f64) -> bool {
        let bits = value.to_bits();
        match self.values.iter().position(|v| v.to_bits() == bits) {
            Some(pos) => {
                self.values.swap_remove(pos);
                true
            }
            None => false,
        }
    }

    /// Iterate over members in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    /// Sum of the `k` smallest members; see [`min_sum_k`].
    pub fn min_sum_k(&self, k: usize) -> Result<f64, AggregateError> {
        min_sum_k(&self.values, k)
    }

    /// Members sorted ascending (multiplicity preserved).
    pub fn sorted(&self) -> Vec<f64> {
        let mut values = self.values.clone();
        values.sort_unstable_by(f64::total_cmp);
        values
    }
}

impl FromIterator<f64> for ScorePool {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

impl Extend<f64> for ScorePool {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        self.values.extend(iter);
    }
}

/// Sum of the `k` smallest elements of `values`, counting multiplicity.
///
/// Selection uses a partial sort, but the summands are added in ascending
/// order, so the result is exactly the sort-then-prefix-sum value.
pub fn min_sum_k(values: &[f64], k: usize) -> Result<f64, AggregateError> {
    if k == 0 {
        return Err(AggregateError::ZeroK);
    }
    if values.len() < k {
        return Err(AggregateError::PoolTooSmall {
            len: values.len(),
            k,
        });
    }
    let mut scratch = values.to_vec();
    if k < scratch.len() {
        // Partial selection: afterwards positions 0..k hold the k smallest.
        scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    }
    let smallest = &mut scratch[..k];
    smallest.sort_unstable_by(f64::total_cmp);
    Ok(smallest.iter().sum())
}

/// Finite-sample conformal quantile of a score sequence.
///
/// Returns the order statistic at rank `min(ceil(level * m), m)` (1-based)
/// where `m` is the number of scores. Ties are handled purely by order
/// statistics: duplicate values occupy consecutive ranks. Levels above 1
/// are legal and saturate at the maximum, which is exactly the finite-sample
/// correction case `level = (1 - alpha) * (1 + 1/n)`.
pub fn conformal_quantile(scores: &[f64], level: f64) -> Result<f64, AggregateError> {
    if scores.is_empty() {
        return Err(AggregateError::EmptyScores);
    }
    if !level.is_finite() || level <= 0.0 {
        return Err(AggregateError::NonPositiveLevel { level });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let rank = quantile_rank(level, sorted.len());
    Ok(sorted[rank - 1])
}

/// The 1-based rank `min(ceil(level * m), m)` used by [`conformal_quantile`].
pub fn quantile_rank(level: f64, len: usize) -> usize {
    debug_assert!(len > 0 && level > 0.0);
    let raw = (level * len as f64).ceil();
    if raw >= len as f64 {
        len
    } else {
        // level > 0 makes ceil at least 1.
        (raw as usize).max(1)
    }
}

/// The calibration quantile level `(1 - alpha) * (1 + 1/m)` shared by every
/// method in this crate.
pub fn calibration_level(alpha: f64, m: usize) -> f64 {
    (1.0 - alpha) * (1.0 + 1.0 / m as f64)
}
