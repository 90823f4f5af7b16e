//! On-disk score-tensor packages.
//!
//! A package is a directory holding `manifest.json` plus plain CSV blocks:
//!
//! * `P.csv` — `n` rows of `n` scores; row `i` is target example `i`.
//! * `test.csv` — `T*n` rows: `t, j`, then `L` score columns.
//! * `full.csv` — present when `has_full`; `T*L` rows: `t, y`, then `n`
//!   score columns.
//! * `truth.csv` — present when `has_truth`; `T` rows: `t, label`.
//!
//! Numbers are written with '.' as the decimal separator at full precision:
//! the shortest decimal form that parses back to the identical bits, so
//! save followed by load is the identity.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::LabelSpace;
use crate::tensor::{ScoreTensor, TensorError};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const P_FILE: &str = "P.csv";
const TEST_FILE: &str = "test.csv";
const FULL_FILE: &str = "full.csv";
const TRUTH_FILE: &str = "truth.csv";

/// Errors raised while reading or writing a score-tensor package.
#[derive(Debug, Error)]
pub enum PackageError {
    #[error("missing file: {path}")]
    MissingFile { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: invalid manifest: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("{file} line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        file: &'static str,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{file} line {line}, field {field}: cannot parse {text:?}")]
    Parse {
        file: &'static str,
        line: usize,
        field: usize,
        text: String,
    },
    #[error("{file} line {line}: index ({t}, {j}) out of range")]
    IndexOutOfRange {
        file: &'static str,
        line: usize,
        t: usize,
        j: usize,
    },
    #[error("{file}: duplicate row for index ({t}, {j})")]
    DuplicateRow {
        file: &'static str,
        t: usize,
        j: usize,
    },
    #[error("{file}: expected {expected} rows, found {found}")]
    RowCount {
        file: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    n: usize,
    #[serde(rename = "T")]
    test_count: usize,
    #[serde(rename = "L")]
    label_count: usize,
    has_full: bool,
    has_truth: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_names: Option<Vec<String>>,
}

impl ScoreTensor {
    /// Load a tensor package from `dir`, validating it fully.
    pub fn load(dir: &Path) -> Result<Self, PackageError> {
        let manifest_path = dir.join(MANIFEST);
        let manifest_text = read_file(&manifest_path)?;
        let manifest: Manifest =
            serde_json::from_str(&manifest_text).map_err(|source| PackageError::Manifest {
                path: manifest_path,
                source,
            })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(PackageError::VersionMismatch {
                found: manifest.format_version,
            });
        }
        let n = manifest.n;
        let test_count = manifest.test_count;
        let label_count = manifest.label_count;

        let p = read_grid(dir, P_FILE, n, n)?;
        let test = read_indexed(dir, TEST_FILE, test_count, n, label_count)?;
        let full = if manifest.has_full {
            Some(read_indexed(dir, FULL_FILE, test_count, label_count, n)?)
        } else {
            None
        };
        let truth = if manifest.has_truth {
            Some(read_truth(dir, test_count)?)
        } else {
            None
        };

        let labels = match manifest.label_names {
            Some(names) => LabelSpace::with_names(label_count, names).map_err(TensorError::from)?,
            None => LabelSpace::new(label_count).map_err(TensorError::from)?,
        };
        Ok(ScoreTensor::from_parts(
            n, test_count, labels, p, test, full, truth,
        )?)
    }

    /// Write this tensor as a package under `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<(), PackageError> {
        fs::create_dir_all(dir).map_err(|source| PackageError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            n: self.n(),
            test_count: self.test_count(),
            label_count: self.label_count(),
            has_full: self.has_full(),
            has_truth: self.truth().is_some(),
            label_names: self.labels().names().map(<[String]>::to_vec),
        };
        let mut manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest is json");
        manifest_text.push('\n');
        write_file(&dir.join(MANIFEST), &manifest_text)?;

        let mut p_text = String::new();
        for i in 0..self.n() {
            push_row(&mut p_text, &[], self.p_row(i));
        }
        write_file(&dir.join(P_FILE), &p_text)?;

        let label_count = self.label_count();
        let mut test_text = String::new();
        for t in 0..self.test_count() {
            for j in 0..self.n() {
                let start = (t * self.n() + j) * label_count;
                push_row(
                    &mut test_text,
                    &[t, j],
                    &self.test_block()[start..start + label_count],
                );
            }
        }
        write_file(&dir.join(TEST_FILE), &test_text)?;

        if let Some(full) = self.full_block() {
            let mut full_text = String::new();
            for t in 0..self.test_count() {
                for y in 0..label_count {
                    let start = (t * label_count + y) * self.n();
                    push_row(&mut full_text, &[t, y], &full[start..start + self.n()]);
                }
            }
            write_file(&dir.join(FULL_FILE), &full_text)?;
        }

        if let Some(truth) = self.truth() {
            let mut truth_text = String::new();
            for (t, &label) in truth.iter().enumerate() {
                let _ = writeln!(truth_text, "{t},{label}");
            }
            write_file(&dir.join(TRUTH_FILE), &truth_text)?;
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<String, PackageError> {
    if !path.exists() {
        return Err(PackageError::MissingFile {
            path: path.to_path_buf(),
        });
    }
    fs::read_to_string(path).map_err(|source| PackageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), PackageError> {
    fs::write(path, contents).map_err(|source| PackageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn push_row(out: &mut String, indices: &[usize], scores: &[f64]) {
    let mut first = true;
    for &index in indices {
        if !first {
            out.push(',');
        }
        let _ = write!(out, "{index}");
        first = false;
    }
    for &score in scores {
        if !first {
            out.push(',');
        }
        let _ = write!(out, "{score}");
        first = false;
    }
    out.push('\n');
}

fn parse_f64(
    file: &'static str,
    line: usize,
    field: usize,
    text: &str,
) -> Result<f64, PackageError> {
    text.trim().parse().map_err(|_| PackageError::Parse {
        file,
        line,
        field,
        text: text.to_string(),
    })
}

fn parse_usize(
    file: &'static str,
    line: usize,
    field: usize,
    text: &str,
) -> Result<usize, PackageError> {
    text.trim().parse().map_err(|_| PackageError::Parse {
        file,
        line,
        field,
        text: text.to_string(),
    })
}

/// Plain `rows x cols` numeric grid (the `P` block).
fn read_grid(
    dir: &Path,
    file: &'static str,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>, PackageError> {
    let text = read_file(&dir.join(file))?;
    let mut values = Vec::with_capacity(rows * cols);
    let mut row_count = 0usize;
    for (line_no, line) in non_empty_lines(&text) {
        row_count += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(PackageError::FieldCount {
                file,
                line: line_no,
                expected: cols,
                found: fields.len(),
            });
        }
        for (field, text) in fields.iter().enumerate() {
            values.push(parse_f64(file, line_no, field, text)?);
        }
    }
    if row_count != rows {
        return Err(PackageError::RowCount {
            file,
            expected: rows,
            found: row_count,
        });
    }
    Ok(values)
}

/// Indexed block: rows of `a, b`, then `width` scores, covering every pair
/// in `0..outer x 0..inner` exactly once (any row order is accepted).
fn read_indexed(
    dir: &Path,
    file: &'static str,
    outer: usize,
    inner: usize,
    width: usize,
) -> Result<Vec<f64>, PackageError> {
    let text = read_file(&dir.join(file))?;
    let expected_rows = outer * inner;
    let mut values = vec![0.0; expected_rows * width];
    let mut seen = vec![false; expected_rows];
    let mut row_count = 0usize;
    for (line_no, line) in non_empty_lines(&text) {
        row_count += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width + 2 {
            return Err(PackageError::FieldCount {
                file,
                line: line_no,
                expected: width + 2,
                found: fields.len(),
            });
        }
        let a = parse_usize(file, line_no, 0, fields[0])?;
        let b = parse_usize(file, line_no, 1, fields[1])?;
        if a >= outer || b >= inner {
            return Err(PackageError::IndexOutOfRange {
                file,
                line: line_no,
                t: a,
                j: b,
            });
        }
        let row = a * inner + b;
        if seen[row] {
            return Err(PackageError::DuplicateRow { file, t: a, j: b });
        }
        seen[row] = true;
        for (offset, text) in fields[2..].iter().enumerate() {
            values[row * width + offset] = parse_f64(file, line_no, offset + 2, text)?;
        }
    }
    if row_count != expected_rows {
        return Err(PackageError::RowCount {
            file,
            expected: expected_rows,
            found: row_count,
        });
    }
    Ok(values)
}

fn read_truth(dir: &Path, test_count: usize) -> Result<Vec<usize>, PackageError> {
    let text = read_file(&dir.join(TRUTH_FILE))?;
    let mut labels = vec![0usize; test_count];
    let mut seen = vec![false; test_count];
    let mut row_count = 0usize;
    for (line_no, line) in non_empty_lines(&text) {
        row_count += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(PackageError::FieldCount {
                file: TRUTH_FILE,
                line: line_no,
                expected: 2,
                found: fields.len(),
            });
        }
        let t = parse_usize(TRUTH_FILE, line_no, 0, fields[0])?;
        if t >= test_count {
            return Err(PackageError::IndexOutOfRange {
                file: TRUTH_FILE,
                line: line_no,
                t,
                j: 0,
            });
        }
        if seen[t] {
            return Err(PackageError::DuplicateRow {
                file: TRUTH_FILE,
                t,
                j: 0,
            });
        }
        seen[t] = true;
        labels[t] = parse_usize(TRUTH_FILE, line_no, 1, fields[1])?;
    }
    if row_count != test_count {
        return Err(PackageError::RowCount {
            file: TRUTH_FILE,
            expected: test_count,
            found: row_count,
        });
    }
    Ok(labels)
}

fn non_empty_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r')))
        .filter(|(_, line)| !line.trim().is_empty())
}
