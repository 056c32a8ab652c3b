use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("cannot read scheme file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scheme document: {0}")]
    Parse(String),
    #[error("scheme has no landmarks")]
    Empty,
    #[error("landmark ids are not dense in [0, {count}): id {id} is {problem}")]
    SparseIds {
        id: usize,
        count: usize,
        problem: &'static str,
    },
    #[error("duplicate landmark name {0:?}")]
    DuplicateName(String),
}

/// Ordered set of named body landmarks produced by a pose estimator.
///
/// Ids are dense in `[0, count)`; the id is the index into a frame's points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkScheme {
    name: String,
    names: Vec<String>,
    by_name: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct SchemeDoc {
    name: String,
    landmarks: Vec<LandmarkDoc>,
}

#[derive(Deserialize)]
struct LandmarkDoc {
    id: usize,
    name: String,
}

impl LandmarkScheme {
    /// Builds a scheme from names listed in id order.
    pub fn new(name: impl Into<String>, names: Vec<String>) -> Result<Self, SchemeError> {
        if names.is_empty() {
            return Err(SchemeError::Empty);
        }
        let mut by_name = HashMap::with_capacity(names.len());
        for (id, n) in names.iter().enumerate() {
            if by_name.insert(n.clone(), id).is_some() {
                return Err(SchemeError::DuplicateName(n.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            names,
            by_name,
        })
    }

    pub fn from_toml_str(doc: &str) -> Result<Self, SchemeError> {
        let doc: SchemeDoc = toml::from_str(doc).map_err(|e| SchemeError::Parse(e.to_string()))?;
        let count = doc.landmarks.len();
        let mut slots: Vec<Option<String>> = vec![None; count];
        for lm in doc.landmarks {
            if lm.id >= count {
                return Err(SchemeError::SparseIds {
                    id: lm.id,
                    count,
                    problem: "out of range",
                });
            }
            if slots[lm.id].replace(lm.name).is_some() {
                return Err(SchemeError::SparseIds {
                    id: lm.id,
                    count,
                    problem: "repeated",
                });
            }
        }
        // every slot is filled: `count` distinct in-range ids for `count` slots
        let names = slots.into_iter().map(Option::unwrap_or_default).collect();
        Self::new(doc.name, names)
    }

    pub fn load(path: &Path) -> Result<Self, SchemeError> {
        let text = std::fs::read_to_string(path).map_err(|source| SchemeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The shipped 33-landmark full-body scheme.
    pub fn full_body_33() -> Self {
        Self::from_toml_str(crate::data::SCHEME_33).expect("embedded 33-landmark scheme is valid")
    }

    /// The shipped 17-landmark scheme.
    pub fn coco_17() -> Self {
        Self::from_toml_str(crate::data::SCHEME_17).expect("embedded 17-landmark scheme is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn name_of(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}
