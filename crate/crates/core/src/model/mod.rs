//! Constants, facts, databases and equivalence relations over constants.

mod database;
mod eqrel;

pub use database::{Database, DatabaseBuilder, Fact, FactId, RelId, Relation};
pub use eqrel::{eqrel_close, induce, EqRel, MergePair};

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("constant `{0}` is not an entity reference and cannot be merged")]
    NonEntityMerge(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected}, got {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{0}` declared twice")]
    DuplicateRelation(String),
}

/// What a constant denotes. Only entity references take part in merges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstKind {
    EntityRef,
    Value,
    Null,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant {
    kind: ConstKind,
    text: String,
}

impl Constant {
    pub fn entity(text: impl Into<String>) -> Self {
        Self {
            kind: ConstKind::EntityRef,
            text: text.into(),
        }
    }

    pub fn value(text: impl Into<String>) -> Self {
        Self {
            kind: ConstKind::Value,
            text: text.into(),
        }
    }

    pub fn null() -> Self {
        Self {
            kind: ConstKind::Null,
            text: String::new(),
        }
    }

    pub fn kind(&self) -> ConstKind {
        self.kind
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_null(&self) -> bool {
        self.kind == ConstKind::Null
    }

    pub fn is_entity(&self) -> bool {
        self.kind == ConstKind::EntityRef
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstKind::Null => f.write_str("nan"),
            _ => f.write_str(&self.text),
        }
    }
}

/// Interned constant. Ids are assigned in lexicographic order of the
/// constant text, so the smallest id of a class is its least member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConstId(pub u32);

impl ConstId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
