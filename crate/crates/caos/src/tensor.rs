//! Precomputed one-shot nonconformity scores for a task.
//!
//! A [`ScoreTensor`] decouples the conformal machinery from whatever model
//! produced the scores: every algorithm in this crate reads from one of its
//! blocks and nothing else.
//!
//! Blocks, for `n` calibration examples, `T` test inputs and `L` labels:
//!
//! * `P` (`n x n`): `p(i, j)` is the score the predictor induced by example
//!   `j` assigns to the pair `(X_i, Y_i)`. The diagonal holds self-scores;
//!   the calibration algorithms index around it explicitly.
//! * `test` (`T x n x L`): `test_score(t, j, y)` is the score predictor `j`
//!   assigns to candidate label `y` for test input `t`.
//! * `full` (`T x L x n`, optional): `full_score(t, y, i)` is the score the
//!   predictor induced by the hypothetical pair `(X_test_t, y)` assigns to
//!   calibration pair `(X_i, Y_i)`. Required only by the full-conformal
//!   construction.
//! * `truth` (length `T`, optional): true test labels, for evaluation.

use thiserror::Error;

use crate::label::{LabelSpace, LabelSpaceError};

/// Validation and shape errors for [`ScoreTensor`].
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("block {block}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        block: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("block {block}: non-finite value {value} at row {row}, column {col}")]
    NonFinite {
        block: &'static str,
        value: f64,
        row: usize,
        col: usize,
    },
    #[error("truth entry {index} is {label}, outside label space of size {label_count}")]
    TruthOutOfRange {
        index: usize,
        label: usize,
        label_count: usize,
    },
    #[error("calibration set must contain at least one example")]
    EmptyCalibration,
    #[error(transparent)]
    Label(#[from] LabelSpaceError),
}

/// All pairwise one-shot scores needed by the calibration algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTensor {
    n: usize,
    test_count: usize,
    labels: LabelSpace,
    p: Vec<f64>,
    test: Vec<f64>,
    full: Option<Vec<f64>>,
    truth: Option<Vec<usize>>,
}

impl ScoreTensor {
    /// Build a tensor from flat row-major blocks, validating shapes,
    /// finiteness and truth-label ranges.
    pub fn from_parts(
        n: usize,
        test_count: usize,
        labels: LabelSpace,
        p: Vec<f64>,
        test: Vec<f64>,
        full: Option<Vec<f64>>,
        truth: Option<Vec<usize>>,
    ) -> Result<Self, TensorError> {
        if n == 0 {
            return Err(TensorError::EmptyCalibration);
        }
        let label_count = labels.count();
        check_block("P", &p, n * n, n)?;
        check_block("test", &test, test_count * n * label_count, n * label_count)?;
        if let Some(full) = &full {
            check_block("full", full, test_count * label_count * n, label_count * n)?;
        }
        if let Some(truth) = &truth {
            if truth.len() != test_count {
                return Err(TensorError::DimensionMismatch {
                    block: "truth",
                    expected: test_count,
                    found: truth.len(),
                });
            }
            for (index, &label) in truth.iter().enumerate() {
                if label >= label_count {
                    return Err(TensorError::TruthOutOfRange {
                        index,
                        label,
                        label_count,
                    });
                }
            }
        }
        Ok(Self {
            n,
            test_count,
            labels,
            p,
            test,
            full,
            truth,
        })
    }

    /// Attach (or replace) truth labels, revalidating their range.
    pub fn with_truth(self, truth: Vec<usize>) -> Result<Self, TensorError> {
        Self::from_parts(
            self.n,
            self.test_count,
            self.labels,
            self.p,
            self.test,
            self.full,
            Some(truth),
        )
    }

    /// Calibration-set size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of test inputs `T`.
    pub fn test_count(&self) -> usize {
        self.test_count
    }

    /// Label space.
    pub fn labels(&self) -> &LabelSpace {
        &self.labels
    }

    /// Label-space size `L`.
    pub fn label_count(&self) -> usize {
        self.labels.count()
    }

    /// Score of calibration pair `i` under the predictor induced by example `j`.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// Row `i` of the calibration matrix: `(X_i, Y_i)` scored by every predictor.
    pub fn p_row(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    /// Score of candidate label `y` for test input `t` under predictor `j`.
    pub fn test_score(&self, t: usize, j: usize, y: usize) -> f64 {
        let label_count = self.labels.count();
        self.test[(t * self.n + j) * label_count + y]
    }

    /// Whether the full-conformal block is present.
    pub fn has_full(&self) -> bool {
        self.full.is_some()
    }

    /// Score of calibration pair `i` under the predictor induced by the
    /// hypothetical pair `(X_test_t, y)`. Panics if the block is absent.
    pub fn full_score(&self, t: usize, y: usize, i: usize) -> f64 {
        let full = self.full.as_ref().expect("full block absent");
        full[(t * self.labels.count() + y) * self.n + i]
    }

    /// True test labels, when recorded.
    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    pub(crate) fn test_block(&self) -> &[f64] {
        &self.test
    }

    pub(crate) fn full_block(&self) -> Option<&[f64]> {
        self.full.as_deref()
    }
}

fn check_block(
    block: &'static str,
    values: &[f64],
    expected: usize,
    row_width: usize,
) -> Result<(), TensorError> {
    if values.len() != expected {
        return Err(TensorError::DimensionMismatch {
            block,
            expected,
            found: values.len(),
        });
    }
    for (pos, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(TensorError::NonFinite {
                block,
                value,
                row: pos / row_width.max(1),
                col: pos % row_width.max(1),
            });
        }
    }
    Ok(())
}
