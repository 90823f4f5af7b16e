//! Evaluation metrics, per-task method evaluation, and report emission.
//!
//! Empirical coverage is the fraction of prediction sets containing the
//! true label; efficiency is the average set size (smaller is better).
//! Both are reported with the standard error of the mean. Reports come in
//! two shapes: a summary CSV with one row per method, miscoverage level and
//! aggregation size, and JSON-lines raw records with one entry per
//! (trial, test input, method) for downstream regrouping.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caos::{self, MethodError, PredictionSet};
use crate::config::Method;
use crate::full;
use crate::scos::{self, CalibrationSweep, SplitError, SplitSpec, SplitVariant};
use crate::tensor::ScoreTensor;

/// Errors from evaluation and report handling.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sets and truths have different lengths ({sets} vs {truths})")]
    LengthMismatch { sets: usize, truths: usize },
    #[error("cannot summarize an empty collection of prediction sets")]
    EmptySets,
    #[error("tensor carries no truth labels; evaluation needs them")]
    MissingTruth,
    #[error("method {method} needs a reference/calibration split")]
    SplitRequired { method: Method },
    #[error(
        "method {method} needs per-label calibration scores, which only synthetic sources provide"
    )]
    SweepRequired { method: Method },
    #[error(
        "set-inclusion invariant violated at test {test_index}, alpha {alpha}: \
         the full-conformal set is not contained in the aggregated set"
    )]
    InclusionBreach { test_index: usize, alpha: f64 },
    #[error("summary csv line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error(transparent)]
    Split(#[from] SplitError),
}

/// Fraction of prediction sets containing the matching truth label.
pub fn empirical_coverage(sets: &[PredictionSet], truths: &[usize]) -> Result<f64, EvalError> {
    if sets.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            sets: sets.len(),
            truths: truths.len(),
        });
    }
    if sets.is_empty() {
        return Err(EvalError::EmptySets);
    }
    let covered = sets
        .iter()
        .zip(truths)
        .filter(|(set, &truth)| set.contains(truth))
        .count();
    Ok(covered as f64 / sets.len() as f64)
}

/// Mean prediction-set size and its standard error.
pub fn average_size(sets: &[PredictionSet]) -> Result<(f64, f64), EvalError> {
    if sets.is_empty() {
        return Err(EvalError::EmptySets);
    }
    let sizes: Vec<f64> = sets.iter().map(|s| s.size() as f64).collect();
    Ok(mean_and_sem(&sizes))
}

/// Mean and standard error of the mean (sample standard deviation over
/// sqrt(count); zero for a single observation).
pub fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    (mean, (variance / count).sqrt())
}

/// Everything needed to evaluate methods on one task.
#[derive(Clone, Copy)]
pub struct EvalSource<'a> {
    pub tensor: &'a ScoreTensor,
    /// Per-label calibration-input scores, when the source can provide them.
    pub sweep: Option<&'a CalibrationSweep>,
}

impl<'a> EvalSource<'a> {
    pub fn tensor_only(tensor: &'a ScoreTensor) -> Self {
        Self {
            tensor,
            sweep: None,
        }
    }
}

/// Evaluation of one method at one miscoverage level on one task.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEval {
    pub method: Method,
    pub alpha: f64,
    pub k: usize,
    pub per_test: Vec<TestEval>,
    /// Whether the hindsight oracle ever fell back to a non-covering set.
    pub oracle_fallback: bool,
}

/// Outcome for one test input. For single-set methods `covered` is 0 or 1
/// and `set_size` is integral; for the averaged split baseline both are
/// means over the reference predictors and `threshold` is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct TestEval {
    pub set_size: f64,
    pub covered: f64,
    pub threshold: Option<f64>,
}

/// Evaluate every requested method at every miscoverage level on one task.
///
/// All methods see identical data and splits. When both the aggregated
/// method and its full-conformal variant run, set inclusion is checked on
/// every test input; a violation is reported as an error rather than a
/// result, since it can only mean a defect.
pub fn evaluate_task(
    source: EvalSource<'_>,
    methods: &[Method],
    alphas: &[f64],
    k: usize,
    split: Option<&SplitSpec>,
) -> Result<Vec<MethodEval>, EvalError> {
    let tensor = source.tensor;
    let truth = tensor.truth().ok_or(EvalError::MissingTruth)?;
    let test_count = tensor.test_count();

    for &method in methods {
        if method.needs_split() && split.is_none() {
            return Err(EvalError::SplitRequired { method });
        }
        if method.needs_calibration_sweep() && source.sweep.is_none() {
            return Err(EvalError::SweepRequired { method });
        }
        if method.needs_full_block() && !tensor.has_full() {
            return Err(EvalError::Method(MethodError::FullBlockMissing));
        }
    }

    let mut evals = Vec::with_capacity(alphas.len() * methods.len());
    for &alpha in alphas {
        let mut caos_sets: Option<Vec<PredictionSet>> = None;
        let mut full_members: Option<Vec<Vec<usize>>> = None;
        for &method in methods {
            let mut oracle_fallback = false;
            let per_test: Vec<TestEval> = match method {
                Method::Caos => {
                    let calibration = caos::calibrate(tensor, alpha, k)?;
                    let sets = (0..test_count)
                        .map(|t| caos::predict(tensor, t, &calibration))
                        .collect::<Result<Vec<_>, _>>()?;
                    let evals = sets
                        .iter()
                        .zip(truth)
                        .map(|(set, &y)| TestEval {
                            set_size: set.size() as f64,
                            covered: f64::from(set.contains(y)),
                            threshold: Some(calibration.threshold),
                        })
                        .collect();
                    caos_sets = Some(sets);
                    evals
                }
                Method::FullCaos => {
                    let predictions = (0..test_count)
                        .map(|t| full::predict(tensor, t, alpha, k))
                        .collect::<Result<Vec<_>, _>>()?;
                    let evals = predictions
                        .iter()
                        .zip(truth)
                        .map(|(prediction, &y)| TestEval {
                            set_size: prediction.size() as f64,
                            covered: f64::from(prediction.contains(y)),
                            threshold: Some(prediction.thresholds()[y]),
                        })
                        .collect();
                    full_members = Some(
                        predictions
                            .into_iter()
                            .map(|p| p.members().to_vec())
                            .collect(),
                    );
                    evals
                }
                Method::Scos => {
                    let split = split.expect("checked above");
                    let report = scos::average_report(tensor, split, alpha)?;
                    (0..test_count)
                        .map(|t| TestEval {
                            set_size: report.mean_size[t],
                            covered: report.coverage[t],
                            threshold: None,
                        })
                        .collect()
                }
                Method::ScosFixed => {
                    let split = split.expect("checked above");
                    let ref_id = split.reference()[0];
                    let calibration = scos::calibrate(tensor, split, ref_id, alpha)?;
                    (0..test_count)
                        .map(|t| {
                            let set = scos::predict(tensor, t, ref_id, &calibration)?;
                            Ok(TestEval {
                                set_size: set.size() as f64,
                                covered: f64::from(set.contains(truth[t])),
                                threshold: Some(calibration.threshold),
                            })
                        })
                        .collect::<Result<_, EvalError>>()?
                }
                Method::ScosBest => {
                    let split = split.expect("checked above");
                    let sweep = source.sweep.expect("checked above");
                    let ref_id = scos::best_select(tensor, split, alpha, sweep)?;
                    let calibration = scos::calibrate(tensor, split, ref_id, alpha)?;
                    (0..test_count)
                        .map(|t| {
                            let set = scos::predict(tensor, t, ref_id, &calibration)?;
                            Ok(TestEval {
                                set_size: set.size() as f64,
                                covered: f64::from(set.contains(truth[t])),
                                threshold: Some(calibration.threshold),
                            })
                        })
                        .collect::<Result<_, EvalError>>()?
                }
                Method::ScosOracle => {
                    let split = split.expect("checked above");
                    let all_sets = scos::all_reference_sets(tensor, split, alpha)?;
                    (0..test_count)
                        .map(|t| {
                            let candidates: Vec<(usize, PredictionSet)> = split
                                .reference()
                                .iter()
                                .zip(&all_sets)
                                .map(|(&ref_id, sets)| (ref_id, sets[t].clone()))
                                .collect();
                            let pick = scos::oracle_pick(candidates, truth[t]);
                            oracle_fallback |= pick.fallback;
                            TestEval {
                                set_size: pick.set.size() as f64,
                                covered: f64::from(pick.set.contains(truth[t])),
                                threshold: Some(pick.set.threshold()),
                            }
                        })
                        .collect()
                }
                Method::SplitCaosRefCal | Method::SplitCaosCal | Method::SplitCaosRef => {
                    let split = split.expect("checked above");
                    let variant = match method {
                        Method::SplitCaosRefCal => SplitVariant::RefAndCal,
                        Method::SplitCaosCal => SplitVariant::CalOnly,
                        _ => SplitVariant::RefOnly,
                    };
                    let (calibration, sets) =
                        scos::split_caos_variant(tensor, split, alpha, k, variant)?;
                    sets.iter()
                        .zip(truth)
                        .map(|(set, &y)| TestEval {
                            set_size: set.size() as f64,
                            covered: f64::from(set.contains(y)),
                            threshold: Some(calibration.threshold),
                        })
                        .collect()
                }
            };
            evals.push(MethodEval {
                method,
                alpha,
                k,
                per_test,
                oracle_fallback,
            });
        }
        if let (Some(caos_sets), Some(full_members)) = (&caos_sets, &full_members) {
            for (test_index, (larger, members)) in caos_sets.iter().zip(full_members).enumerate() {
                if !members.iter().all(|&y| larger.contains(y)) {
                    return Err(EvalError::InclusionBreach { test_index, alpha });
                }
            }
        }
    }
    Ok(evals)
}

/// One raw evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub trial: usize,
    pub test_index: usize,
    pub method: Method,
    pub alpha: f64,
    pub k: usize,
    pub set_size: f64,
    pub covered: f64,
    pub threshold: Option<f64>,
}

/// One summary row: a method at one miscoverage level and aggregation size.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
    pub test_count: usize,
    pub trials: usize,
    pub coverage: f64,
    pub coverage_sem: f64,
    pub size: f64,
    pub size_sem: f64,
    pub flags: Vec<String>,
}

/// Summary rows plus the raw records behind them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub records: Vec<RawRecord>,
}

pub const CSV_HEADER: &str = "method,alpha,k,n,T,trials,coverage,coverage_sem,size,size_sem,flags";

impl EvalReport {
    /// Assemble a report from per-trial evaluations. Rows aggregate records
    /// grouped by (method, alpha, k), so the summary always equals a
    /// recomputation from the raw records.
    pub fn build(evals_by_trial: &[(usize, Vec<MethodEval>)], n: usize, test_count: usize) -> Self {
        let trials = evals_by_trial.len();
        let mut records = Vec::new();
        let mut group_order: Vec<(Method, u64, usize)> = Vec::new();
        let mut fallback_groups: HashSet<(Method, u64, usize)> = HashSet::new();
        for (trial, evals) in evals_by_trial {
            for eval in evals {
                let key = (eval.method, eval.alpha.to_bits(), eval.k);
                if !group_order.contains(&key) {
                    group_order.push(key);
                }
                if eval.oracle_fallback {
                    fallback_groups.insert(key);
                }
                for (test_index, test) in eval.per_test.iter().enumerate() {
                    records.push(RawRecord {
                        trial: *trial,
                        test_index,
                        method: eval.method,
                        alpha: eval.alpha,
                        k: eval.k,
                        set_size: test.set_size,
                        covered: test.covered,
                        threshold: test.threshold,
                    });
                }
            }
        }
        let rows = group_order
            .into_iter()
            .map(|key| {
                let (method, alpha_bits, k) = key;
                let alpha = f64::from_bits(alpha_bits);
                let group: Vec<&RawRecord> = records
                    .iter()
                    .filter(|r| r.method == method && r.alpha.to_bits() == alpha_bits && r.k == k)
                    .collect();
                let covered: Vec<f64> = group.iter().map(|r| r.covered).collect();
                let sizes: Vec<f64> = group.iter().map(|r| r.set_size).collect();
                let (coverage, coverage_sem) = mean_and_sem(&covered);
                let (size, size_sem) = mean_and_sem(&sizes);
                let mut flags: Vec<String> = method.flags().iter().map(|f| f.to_string()).collect();
                if fallback_groups.contains(&key) {
                    flags.push("oracle-fallback".to_string());
                }
                ReportRow {
                    method,
                    alpha,
                    k,
                    n,
                    test_count,
                    trials,
                    coverage,
                    coverage_sem,
                    size,
                    size_sem,
                    flags,
                }
            })
            .collect();
        Self { rows, records }
    }

    /// Append another report's rows and records (used by ablation sweeps).
    pub fn merge(&mut self, other: EvalReport) {
        self.rows.extend(other.rows);
        self.records.extend(other.records);
    }

    /// The summary table as CSV text.
    pub fn csv_string(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                row.method,
                row.alpha,
                row.k,
                row.n,
                row.test_count,
                row.trials,
                row.coverage,
                row.coverage_sem,
                row.size,
                row.size_sem,
                row.flags.join(";"),
            );
        }
        out
    }

    /// The raw records as JSON lines.
    pub fn jsonl_string(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            let line = serde_json::to_string(record).expect("record serializes");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Write `summary.csv` and/or `records.jsonl` under `dir`; returns the
    /// paths written.
    pub fn save(&self, dir: &Path, formats: &[ReportFormat]) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for format in formats {
            let (name, contents) = match format {
                ReportFormat::Csv => ("summary.csv", self.csv_string()),
                ReportFormat::Jsonl => ("records.jsonl", self.jsonl_string()),
            };
            let path = dir.join(name);
            let mut file = std::fs::File::create(&path)?;
            file.write_all(contents.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Report output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" => Ok(ReportFormat::Jsonl),
            other => Err(format!("unknown format {other:?}; expected csv or jsonl")),
        }
    }
}

/// Parse a summary CSV produced by [`EvalReport::csv_string`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<ReportRow>, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(EvalError::CsvParse {
                line: 1,
                message: format!("unexpected header {header:?}"),
            })
        }
        None => {
            return Err(EvalError::CsvParse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = index + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(EvalError::CsvParse {
                line: line_no,
                message: format!("expected 11 fields, found {}", fields.len()),
            });
        }
        let parse_err = |message: String| EvalError::CsvParse {
            line: line_no,
            message,
        };
        let method: Method = fields[0].parse().map_err(|e| parse_err(format!("{e}")))?;
        let parse_f64 = |field: usize| -> Result<f64, EvalError> {
            fields[field]
                .parse()
                .map_err(|_| parse_err(format!("bad float {:?}", fields[field])))
        };
        let parse_usize = |field: usize| -> Result<usize, EvalError> {
            fields[field]
                .parse()
                .map_err(|_| parse_err(format!("bad integer {:?}", fields[field])))
        };
        rows.push(ReportRow {
            method,
            alpha: parse_f64(1)?,
            k: parse_usize(2)?,
            n: parse_usize(3)?,
            test_count: parse_usize(4)?,
            trials: parse_usize(5)?,
            coverage: parse_f64(6)?,
            coverage_sem: parse_f64(7)?,
            size: parse_f64(8)?,
            size_sem: parse_f64(9)?,
            flags: if fields[10].is_empty() {
                Vec::new()
            } else {
                fields[10].split(';').map(str::to_string).collect()
            },
        });
    }
    Ok(rows)
}
