//! Finite label spaces addressed by index.

use std::collections::HashSet;

use thiserror::Error;

/// Errors raised when constructing a [`LabelSpace`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelSpaceError {
    #[error("label space must contain at least one label")]
    Empty,
    #[error("expected {expected} display names, found {found}")]
    NameCountMismatch { expected: usize, found: usize },
    #[error("duplicate display name: {name:?}")]
    DuplicateName { name: String },
}

/// A finite label space of size `L`, with labels addressed as `0..L-1`.
///
/// Display names are optional; when present there is exactly one unique
/// name per index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    count: usize,
    names: Option<Vec<String>>,
}

impl LabelSpace {
    /// An anonymous label space of `count` labels.
    pub fn new(count: usize) -> Result<Self, LabelSpaceError> {
        if count == 0 {
            return Err(LabelSpaceError::Empty);
        }
        Ok(Self { count, names: None })
    }

    /// A label space whose labels carry display names.
    pub fn with_names(count: usize, names: Vec<String>) -> Result<Self, LabelSpaceError> {
        if count == 0 {
            return Err(LabelSpaceError::Empty);
        }
        if names.len() != count {
            return Err(LabelSpaceError::NameCountMismatch {
                expected: count,
                found: names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(LabelSpaceError::DuplicateName { name: name.clone() });
            }
        }
        Ok(Self {
            count,
            names: Some(names),
        })
    }

    /// Number of labels `L`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Display name for a label index, when names are present.
    pub fn name(&self, label: usize) -> Option<&str> {
        self.names
            .as_ref()
            .and_then(|n| n.get(label))
            .map(String::as_str)
    }

    /// All display names, when present.
    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Iterator over label indices.
    pub fn indices(&self) -> std::ops::Range<usize> {
        0..self.count
    }

    /// Whether `label` addresses a member of this space.
    pub fn contains(&self, label: usize) -> bool {
        label < self.count
    }
}
