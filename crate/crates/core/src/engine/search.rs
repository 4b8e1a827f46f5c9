//! Depth-first search over hard-saturated equivalence relations.
//!
//! A state is closed under the hard rules. Its successors apply one open
//! soft-rule answer and close again. Every solution is reachable this way:
//! a solution is closed under the hard rules, so replaying any derivation
//! of it and saturating after each soft step never leaves it.

use std::collections::{BTreeSet, HashSet};
use std::ops::ControlFlow;

use super::fixpoint::{open_answers, saturate, Step};
use super::{Engine, EngineError, Solution};
use crate::matcher::View;
use crate::model::{EqRel, MergePair};

struct Node {
    eq: EqRel,
    parent: Option<usize>,
    steps: Vec<Step>,
}

impl Engine<'_> {
    fn derivation(nodes: &[Node], mut at: usize) -> Vec<Step> {
        let mut chunks = Vec::new();
        loop {
            chunks.push(&nodes[at].steps);
            match nodes[at].parent {
                Some(p) => at = p,
                None => break,
            }
        }
        chunks.into_iter().rev().flatten().cloned().collect()
    }

    /// Open soft answers of `e`, one per representative pair, ordered by rule
    /// label and then pair.
    fn branches(&self, e: &EqRel) -> Result<Vec<Step>, EngineError> {
        let view = View::new(self.db, e);
        let mut order: Vec<usize> = (0..self.soft.len()).collect();
        order.sort_by(|&a, &b| self.soft[a].label.cmp(&self.soft[b].label));
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in order {
            let mut answers = open_answers(&self.soft[r], &view, self.sims, self.opts.eval, None)?;
            answers.sort_by_key(|(p, _)| MergePair::new(e.rep(p.left()), e.rep(p.right())));
            for (pair, witness) in answers {
                if seen.insert(MergePair::new(e.rep(pair.left()), e.rep(pair.right()))) {
                    out.push(Step {
                        rule: self.soft[r].label.clone(),
                        pair,
                        witness,
                    });
                }
            }
        }
        Ok(out)
    }

    fn close_hard(&self, e: EqRel, step: &Step) -> Result<(EqRel, Vec<Step>), EngineError> {
        let mut e = e;
        e.union(step.pair.left(), step.pair.right())?;
        let mut steps = vec![step.clone()];
        let touched = [step.pair.left(), step.pair.right()].into_iter().collect();
        let e = saturate(
            self.db,
            &self.hard,
            e,
            Some(touched),
            self.sims,
            self.opts.eval,
            crate::exec::Exec::Sequential,
            Some(&mut steps),
        )?;
        Ok((e, steps))
    }

    /// Calls `visit` once for every solution, each with a distinct relation,
    /// until it breaks.
    pub(crate) fn search(
        &self,
        mut visit: impl FnMut(Solution) -> ControlFlow<()>,
    ) -> Result<(), EngineError> {
        let mut root_steps = Vec::new();
        let root = saturate(
            self.db,
            &self.hard,
            EqRel::identity(self.db),
            None,
            self.sims,
            self.opts.eval,
            self.opts.exec,
            Some(&mut root_steps),
        )?;
        if !self.dcs_hold(&root, true) {
            return Ok(());
        }
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        seen.insert(root.signature());
        let mut nodes = vec![Node {
            eq: root,
            parent: None,
            steps: root_steps,
        }];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if self.dcs_hold(&nodes[at].eq, false) {
                let sol = Solution {
                    eq: nodes[at].eq.clone(),
                    derivation: Self::derivation(&nodes, at),
                };
                if visit(sol).is_break() {
                    return Ok(());
                }
            }
            let branches = self.branches(&nodes[at].eq)?;
            let base = &nodes[at].eq;
            let children = self
                .opts
                .exec
                .map_min(&branches, 4, |b| self.close_hard(base.clone(), b));
            let mut fresh = Vec::new();
            for child in children {
                let (eq, steps) = child?;
                if !seen.insert(eq.signature()) {
                    continue;
                }
                if !self.dcs_hold(&eq, true) {
                    continue;
                }
                nodes.push(Node {
                    eq,
                    parent: Some(at),
                    steps,
                });
                fresh.push(nodes.len() - 1);
            }
            stack.extend(fresh.into_iter().rev());
        }
        Ok(())
    }
}
