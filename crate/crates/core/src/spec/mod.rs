//! Specification language: schema, merge rules, denial constraints, and the
//! rewrites used to compute bounds and similarity candidates.

mod ast;
mod parser;

pub use ast::*;
pub use parser::{parse_spec, SpecError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::Database;

/// A column used both to carry merged entities and to feed a similarity atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimSafetyViolation {
    pub relation: String,
    pub position: usize,
    pub attribute: String,
}

impl fmt::Display for SimSafetyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{} is both a merge position and a similarity position",
            self.relation, self.attribute
        )
    }
}

/// Empty iff no column is both a merge-head position and a similarity position.
pub fn validate_sim_safety(spec: &Specification) -> Vec<SimSafetyViolation> {
    let merge = spec.merge_positions();
    let sim = spec.sim_positions();
    let mut out = Vec::new();
    for (rel, positions) in &merge {
        let Some(sim_pos) = sim.get(rel) else { continue };
        for pos in positions.intersection(sim_pos) {
            let attribute = spec
                .schema
                .get(rel)
                .map(|d| d.attrs[*pos].name.clone())
                .unwrap_or_default();
            out.push(SimSafetyViolation {
                relation: rel.clone(),
                position: *pos,
                attribute,
            });
        }
    }
    out
}

/// Constants of `db` that occur both in a merge-head column and in a
/// similarity column. Non-empty output means the data breaks the
/// assumption that merged constants never reach a similarity atom.
pub fn data_sim_conflicts(spec: &Specification, db: &Database) -> Vec<String> {
    let column_values = |cols: &BTreeMap<String, BTreeSet<usize>>| {
        let mut vals = BTreeSet::new();
        for (rel, positions) in cols {
            let Some(rid) = db.relation_id(rel) else { continue };
            for &f in db.facts_of(rid) {
                for &p in positions {
                    let c = db.fact(f).args[p];
                    if !db.is_null(c) {
                        vals.insert(c);
                    }
                }
            }
        }
        vals
    };
    let merge = column_values(&spec.merge_positions());
    let sim = column_values(&spec.sim_positions());
    merge
        .intersection(&sim)
        .map(|c| db.constant(*c).to_string())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformMode {
    /// Hard rules only, no constraints.
    Lb,
    /// Hard rules plus soft rules promoted to hard, no constraints.
    Ub,
    /// `Ub` with every similarity atom dropped.
    LooseUb,
    /// One candidate-collection rule per similarity atom occurrence.
    SimPhase2,
}

impl Specification {
    pub fn transform(&self, mode: TransformMode) -> Specification {
        let mut out = Specification {
            schema: self.schema.clone(),
            hard: Vec::new(),
            soft: Vec::new(),
            dcs: Vec::new(),
            getsim: Vec::new(),
            sim_default: self.sim_default,
        };
        match mode {
            TransformMode::Lb => out.hard = self.hard.clone(),
            TransformMode::Ub | TransformMode::LooseUb => {
                out.hard = self
                    .rules()
                    .map(|r| Rule {
                        kind: RuleKind::Hard,
                        ..r.clone()
                    })
                    .collect();
                if mode == TransformMode::LooseUb {
                    for r in &mut out.hard {
                        r.body.sims.clear();
                    }
                }
            }
            TransformMode::SimPhase2 => {
                for r in self.rules() {
                    for (i, s) in r.body.sims.iter().enumerate() {
                        let mut body = r.body.clone();
                        body.sims.clear();
                        body.neqs.clear();
                        out.getsim.push(GetSimRule {
                            label: format!("{}/getsim{}", r.label, i),
                            source: r.label.clone(),
                            func: s.func,
                            left: s.left.clone(),
                            right: s.right.clone(),
                            body,
                        });
                    }
                }
            }
        }
        out
    }

    /// One-line overview, e.g. `sim-safe: yes; 1 hard, 1 soft, 1 DC`.
    pub fn summary(&self) -> String {
        let safe = if validate_sim_safety(self).is_empty() {
            "yes"
        } else {
            "no"
        };
        format!(
            "sim-safe: {safe}; {} hard, {} soft, {} DC",
            self.hard.len(),
            self.soft.len(),
            self.dcs.len()
        )
    }
}
