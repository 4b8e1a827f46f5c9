//! Semi-naive saturation of merge rules.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crate::exec::Exec;
use crate::matcher::{for_each_match, CompiledBody, Delta, EvalOptions, MatchError, View, Witness};
use crate::model::{ConstId, Database, EqRel, FactId, MergePair};
use crate::sim::SimSource;
use crate::spec::{Rule, Schema};

/// A rule compiled against one database.
#[derive(Clone, Debug)]
pub(crate) struct CRule {
    pub label: String,
    pub body: CompiledBody,
    pub head: (usize, usize),
}

impl CRule {
    pub fn compile(rule: &Rule, schema: &Schema, db: &Database) -> Self {
        let body = CompiledBody::compile(&rule.body, schema, db);
        let head = (
            body.var(&rule.head.0).expect("head variables occur in the body"),
            body.var(&rule.head.1).expect("head variables occur in the body"),
        );
        Self {
            label: rule.label.clone(),
            body,
            head,
        }
    }
}

/// One applied rule answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: String,
    /// The answer as bound by the witness, before taking representatives.
    pub pair: MergePair,
    pub witness: Witness,
}

/// Answers of `rule` over `view` whose head constants are not yet equivalent,
/// in discovery order, one per representative pair.
pub(crate) fn open_answers(
    rule: &CRule,
    view: &View<'_>,
    sims: &dyn SimSource,
    opts: EvalOptions,
    delta: Option<&Delta<'_>>,
) -> Result<Vec<(MergePair, Witness)>, MatchError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let (x, y) = rule.head;
    for_each_match(&rule.body, Some(rule.head), view, sims, opts, delta, &mut |w| {
        let (a, b) = (w.binding[x], w.binding[y]);
        let key = MergePair::new(view.rep(a), view.rep(b));
        if !key.is_reflexive() && seen.insert(key) {
            out.push((MergePair::new(a, b), w.clone()));
        }
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Facts mentioning a member of any class that contains one of `touched`.
pub(crate) fn delta_facts(db: &Database, e: &EqRel, touched: &BTreeSet<ConstId>) -> Vec<FactId> {
    let reps: BTreeSet<ConstId> = touched.iter().map(|&c| e.rep(c)).collect();
    let mut out: BTreeSet<FactId> = BTreeSet::new();
    for c in db.const_ids() {
        if reps.contains(&e.rep(c)) {
            out.extend(db.facts_with(c).iter().copied());
        }
    }
    out.into_iter().collect()
}

/// Applies `rules` to `e` until no answer adds a new pair.
///
/// With `touched = None` the first round evaluates every rule in full;
/// otherwise `e` is assumed closed under `rules` except for joins through the
/// classes of `touched`. Every later round only looks at facts that mention a
/// class grown in the previous round. Applied answers are appended to `steps`.
pub(crate) fn saturate(
    db: &Database,
    rules: &[CRule],
    mut e: EqRel,
    touched: Option<BTreeSet<ConstId>>,
    sims: &dyn SimSource,
    opts: EvalOptions,
    exec: Exec,
    mut steps: Option<&mut Vec<Step>>,
) -> Result<EqRel, MatchError> {
    let mut delta: Option<Vec<FactId>> = touched.map(|t| delta_facts(db, &e, &t));
    loop {
        if delta.as_ref().is_some_and(|d| d.is_empty()) {
            break;
        }
        let tasks: Vec<(usize, Option<usize>)> = match &delta {
            None => (0..rules.len()).map(|r| (r, None)).collect(),
            Some(_) => rules
                .iter()
                .enumerate()
                .flat_map(|(r, rule)| (0..rule.body.atom_count()).map(move |a| (r, Some(a))))
                .collect(),
        };
        let found = {
            let view = View::new(db, &e);
            let results = exec.map_min(&tasks, 4, |&(r, atom)| {
                let d = atom.map(|atom| Delta {
                    atom,
                    facts: delta.as_deref().unwrap_or(&[]),
                });
                open_answers(&rules[r], &view, sims, opts, d.as_ref()).map(|v| (r, v))
            });
            results.into_iter().collect::<Result<Vec<_>, _>>()?
        };
        let mut touched = BTreeSet::new();
        for (r, answers) in found {
            for (pair, witness) in answers {
                let changed = e
                    .union(pair.left(), pair.right())
                    .expect("rule heads bind entity references");
                if changed {
                    touched.insert(pair.left());
                    touched.insert(pair.right());
                    if let Some(s) = steps.as_deref_mut() {
                        s.push(Step {
                            rule: rules[r].label.clone(),
                            pair,
                            witness,
                        });
                    }
                }
            }
        }
        if touched.is_empty() {
            break;
        }
        e.compress();
        delta = Some(delta_facts(db, &e, &touched));
    }
    e.compress();
    Ok(e)
}

/// Iterates every rule over the whole database until nothing changes. Slow,
/// kept as a reference for the semi-naive loop.
#[cfg(test)]
pub(crate) fn saturate_naive(
    db: &Database,
    rules: &[CRule],
    mut e: EqRel,
    sims: &dyn SimSource,
    opts: EvalOptions,
) -> Result<EqRel, MatchError> {
    loop {
        let mut changed = false;
        let snapshot = e.clone();
        let view = View::new(db, &snapshot);
        for rule in rules {
            for (pair, _) in open_answers(rule, &view, sims, opts, None)? {
                changed |= e.union(pair.left(), pair.right()).expect("entity heads");
            }
        }
        if !changed {
            return Ok(e);
        }
    }
}
