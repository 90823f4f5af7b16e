//! The score-provider contract and tensor materialization.
//!
//! A [`ScoreProvider`] is the single extension point for plugging real
//! models into this crate: anything that can score a candidate label for a
//! target input, conditioned on one labeled reference example. No model
//! runtimes live here; providers typically wrap precomputed embeddings or
//! log-likelihoods.

use rayon::prelude::*;
use thiserror::Error;

use crate::label::LabelSpace;
use crate::tensor::{ScoreTensor, TensorError};

/// A labeled example addressed by its position within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExampleRef {
    /// Index of the example within its dataset.
    pub index: usize,
    /// Label index in `0..L-1`.
    pub label: usize,
}

/// One-shot nonconformity scoring, conditioned on a single reference example.
///
/// Implementations must be deterministic (identical arguments yield
/// bit-identical results), must return finite values, and must depend only
/// on the reference pair and the target pair — never on the rest of the
/// dataset. That locality is what makes the aggregated score symmetric in
/// its dataset argument, which the coverage guarantee relies on.
pub trait ScoreProvider: Sync {
    /// Input type for examples (feature vectors, embeddings, ...).
    type Input: Sync;

    /// Number of labels `L` this provider scores against.
    fn label_count(&self) -> usize;

    /// Score of `candidate` for `target`, using `reference` as the one
    /// labeled demonstration. Smaller means more conforming.
    fn score(
        &self,
        reference: (&Self::Input, usize),
        target: &Self::Input,
        candidate: usize,
    ) -> f64;
}

/// Errors raised by [`materialize`].
#[derive(Debug, Error)]
pub enum MaterializeError {
    #[error("need at least 2 calibration examples, got {n}")]
    TooFewExamples { n: usize },
    #[error(
        "calibration example {index} has label {label}, outside label space of size {label_count}"
    )]
    LabelOutOfRange {
        index: usize,
        label: usize,
        label_count: usize,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Evaluate a provider on every pair the calibration algorithms need and
/// assemble the result into a validated [`ScoreTensor`].
///
/// With `calib = [(x_0, y_0), ..]` and `test_inputs = [x'_0, ..]`:
///
/// * `p(i, j)   = score((x_j, y_j), x_i, y_i)`
/// * `test(t, j, y) = score((x_j, y_j), x'_t, y)`
/// * `full(t, y, i) = score((x'_t, y), x_i, y_i)` when `with_full` is set.
///
/// Entries are evaluated in parallel; since providers are deterministic the
/// result is independent of evaluation order. Non-finite provider output is
/// rejected with the indices of the offending entry.
pub fn materialize<P: ScoreProvider>(
    provider: &P,
    calib: &[(P::Input, usize)],
    test_inputs: &[P::Input],
    with_full: bool,
) -> Result<ScoreTensor, MaterializeError> {
    let n = calib.len();
    if n < 2 {
        return Err(MaterializeError::TooFewExamples { n });
    }
    let label_count = provider.label_count();
    for (index, (_, label)) in calib.iter().enumerate() {
        if *label >= label_count {
            return Err(MaterializeError::LabelOutOfRange {
                index,
                label: *label,
                label_count,
            });
        }
    }
    let test_count = test_inputs.len();

    let mut p = vec![0.0; n * n];
    p.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let (target, target_label) = &calib[i];
        for (j, slot) in row.iter_mut().enumerate() {
            let (reference, reference_label) = &calib[j];
            *slot = provider.score((reference, *reference_label), target, *target_label);
        }
    });

    let mut test = vec![0.0; test_count * n * label_count];
    test.par_chunks_mut(n * label_count)
        .enumerate()
        .for_each(|(t, block)| {
            let target = &test_inputs[t];
            for j in 0..n {
                let (reference, reference_label) = &calib[j];
                for y in 0..label_count {
                    block[j * label_count + y] =
                        provider.score((reference, *reference_label), target, y);
                }
            }
        });

    let full = if with_full {
        let mut full = vec![0.0; test_count * label_count * n];
        full.par_chunks_mut(label_count * n)
            .enumerate()
            .for_each(|(t, block)| {
                let reference = &test_inputs[t];
                for y in 0..label_count {
                    for (i, (target, target_label)) in calib.iter().enumerate() {
                        block[y * n + i] = provider.score((reference, y), target, *target_label);
                    }
                }
            });
        Some(full)
    } else {
        None
    };

    let labels = LabelSpace::new(label_count).map_err(TensorError::from)?;
    Ok(ScoreTensor::from_parts(
        n, test_count, labels, p, test, full, None,
    )?)
}
