//! Collective entity resolution with declarative merge rules.
//!
//! A [`spec::Specification`] holds hard rules (merges that must happen), soft
//! rules (merges that may happen) and denial constraints (combinations that
//! must not). Over a [`model::Database`] the [`engine::Engine`] computes the
//! lower and upper bounds, enumerates solutions and maximal solutions,
//! derives possible and certain merges, and assigns recursion levels;
//! [`explain`] builds proof trees for individual merges.

pub mod engine;
pub mod exec;
pub mod explain;
pub mod matcher;
pub mod model;
pub mod pipeline;
pub mod sim;
pub mod spec;

#[cfg(test)]
mod testing;

pub use engine::{Engine, EngineError, EngineOptions, LevelMap, LevelsScope, MergeSets, Solution};
pub use exec::Exec;
pub use matcher::{EvalOptions, Matcher, NullInequality};
pub use model::{Constant, ConstId, Database, EqRel, MergePair};
pub use sim::{Score, SimFunc, SimStore};
pub use spec::{parse_spec, Specification};
