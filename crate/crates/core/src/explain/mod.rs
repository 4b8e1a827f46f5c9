//! Proof trees: why a pair of constants is merged in a solution.
//!
//! A rule node applies one rule to database facts; whenever two occurrences
//! of a body variable hold different constants, the node has a merge child
//! for that pair. A transitive node chains two merges through a shared
//! constant. Leaves are facts and similarity facts.

mod render;
mod validate;

pub use render::{summary, to_dot, to_json};
pub use validate::validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::engine::{CRule, Engine, EngineError, LevelMap, LevelsScope};
use crate::matcher::{for_each_match, Slot, View, Witness};
use crate::model::{ConstId, EqRel, FactId, MergePair};
use crate::sim::{Score, SimFunc};

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("({0}, {1}) is not a merge of the solution")]
    NotInSolution(String, String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofNode {
    Rule {
        pair: (ConstId, ConstId),
        rule: String,
        children: Vec<ProofNode>,
    },
    Transitive {
        pair: (ConstId, ConstId),
        children: Vec<ProofNode>,
    },
    Fact(FactId),
    Sim {
        func: SimFunc,
        left: ConstId,
        right: ConstId,
        score: Score,
    },
}

impl ProofNode {
    /// The merged pair, for rule and transitive nodes.
    pub fn pair(&self) -> Option<(ConstId, ConstId)> {
        match self {
            ProofNode::Rule { pair, .. } | ProofNode::Transitive { pair, .. } => Some(*pair),
            _ => None,
        }
    }

    pub fn children(&self) -> &[ProofNode] {
        match self {
            ProofNode::Rule { children, .. } | ProofNode::Transitive { children, .. } => children,
            _ => &[],
        }
    }

    pub fn is_merge(&self) -> bool {
        self.pair().is_some()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(ProofNode::node_count).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub root: ProofNode,
}

impl ProofTree {
    pub fn rule_depth(&self) -> usize {
        rule_depth(&self.root)
    }
}

/// Largest number of rule nodes on a path from a leaf to `node`.
pub fn rule_depth(node: &ProofNode) -> usize {
    let below = node.children().iter().map(rule_depth).max().unwrap_or(0);
    match node {
        ProofNode::Rule { .. } => below + 1,
        _ => below,
    }
}

/// Constants held by each occurrence of each variable of a witnessed body.
pub(crate) fn occurrences(
    rule: &CRule,
    w: &Witness,
    db: &crate::model::Database,
) -> Vec<Vec<ConstId>> {
    let mut occ = vec![Vec::new(); rule.body.vars.len()];
    for (i, atom) in rule.body.atoms.iter().enumerate() {
        let fact = db.fact(w.facts[i]);
        for (pos, s) in atom.slots.iter().enumerate() {
            if let Slot::Var(v) = s {
                occ[*v].push(fact.args[pos]);
            }
        }
    }
    occ
}

struct RuleEdge {
    rule: usize,
    witness: Witness,
}

struct Builder<'e, 'a> {
    engine: &'e Engine<'a>,
    rules: Vec<&'e CRule>,
    sol: &'e EqRel,
    levels: LevelMap,
    /// Rule edges per level, keyed by oriented constant pair.
    edges: BTreeMap<usize, BTreeMap<(ConstId, ConstId), RuleEdge>>,
}

impl<'e, 'a> Builder<'e, 'a> {
    fn level(&self, a: ConstId, b: ConstId) -> usize {
        self.levels
            .get(MergePair::new(a, b))
            .expect("pairs of the solution have a level")
    }

    /// Answers of every rule at `S_{level-1}` inside the solution, with the
    /// least witness for each pair of head occurrences.
    fn edges_at(&mut self, level: usize) -> Result<(), ExplainError> {
        if self.edges.contains_key(&level) {
            return Ok(());
        }
        let db = self.engine.db;
        let prev = &self.levels.chain()[level - 1];
        let view = View::new(db, prev);
        let text_key = |r: usize, w: &Witness| -> (String, Vec<&str>) {
            (
                self.rules[r].label.clone(),
                w.binding.iter().map(|&c| db.text(c)).collect(),
            )
        };
        let mut found: BTreeMap<(ConstId, ConstId), RuleEdge> = BTreeMap::new();
        for (r, rule) in self.rules.iter().enumerate() {
            let mut witnesses = Vec::new();
            for_each_match(
                &rule.body,
                Some(rule.head),
                &view,
                self.engine.sims,
                self.engine.opts.eval,
                None,
                &mut |w| {
                    witnesses.push(w.clone());
                    ControlFlow::Continue(())
                },
            )
            .map_err(EngineError::from)?;
            for w in witnesses {
                let occ = occurrences(rule, &w, db);
                let (xs, ys) = (&occ[rule.head.0], &occ[rule.head.1]);
                for &u in xs {
                    for &v in ys {
                        if u == v || !self.sol.same(u, v) {
                            continue;
                        }
                        for key in [(u, v), (v, u)] {
                            let better = match found.get(&key) {
                                None => true,
                                Some(old) => text_key(r, &w) < text_key(old.rule, &old.witness),
                            };
                            if better {
                                found.insert(
                                    key,
                                    RuleEdge {
                                        rule: r,
                                        witness: w.clone(),
                                    },
                                );
                            }
                        }
                    }
                }
            }
        }
        self.edges.insert(level, found);
        Ok(())
    }

    fn build(&mut self, a: ConstId, b: ConstId) -> Result<ProofNode, ExplainError> {
        let level = self.level(a, b);
        self.edges_at(level)?;
        let prev = self.levels.chain()[level - 1].clone();
        let here = self.levels.chain()[level].clone();
        let class = here.class_of(a);
        // shortest path from a to b over lower-level merges and rule edges
        let mut back: BTreeMap<ConstId, ConstId> = BTreeMap::new();
        let mut queue = VecDeque::from([a]);
        let mut seen: BTreeSet<ConstId> = BTreeSet::from([a]);
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &v in &class {
                if seen.contains(&v) {
                    continue;
                }
                let linked = prev.same(u, v) || self.edges[&level].contains_key(&(u, v));
                if linked {
                    seen.insert(v);
                    back.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        let mut path = vec![b];
        while *path.last().expect("non-empty") != a {
            let at = *path.last().expect("non-empty");
            path.push(back[&at]);
        }
        path.reverse();
        self.chain(&path, &prev, level)
    }

    /// Right-folded transitive chain over `path`.
    fn chain(
        &mut self,
        path: &[ConstId],
        prev: &EqRel,
        level: usize,
    ) -> Result<ProofNode, ExplainError> {
        let (a, b) = (path[0], path[path.len() - 1]);
        if path.len() == 2 {
            return self.edge(a, b, prev, level);
        }
        let first = self.edge(a, path[1], prev, level)?;
        let rest = self.chain(&path[1..], prev, level)?;
        Ok(ProofNode::Transitive {
            pair: (a, b),
            children: vec![first, rest],
        })
    }

    fn edge(
        &mut self,
        u: ConstId,
        v: ConstId,
        prev: &EqRel,
        level: usize,
    ) -> Result<ProofNode, ExplainError> {
        if prev.same(u, v) {
            return self.build(u, v);
        }
        let edge = &self.edges[&level][&(u, v)];
        let (r, w) = (edge.rule, edge.witness.clone());
        self.rule_node(r, &w, (u, v))
    }

    fn rule_node(
        &mut self,
        r: usize,
        w: &Witness,
        pair: (ConstId, ConstId),
    ) -> Result<ProofNode, ExplainError> {
        let db = self.engine.db;
        let rule = self.rules[r];
        let mut children: Vec<ProofNode> = w.facts.iter().map(|&f| ProofNode::Fact(f)).collect();
        for s in &rule.body.sims {
            let (l, rr) = (w.binding[s.left], w.binding[s.right]);
            let score = self
                .engine
                .sims
                .score(s.func, l, rr)
                .expect("matched similarity atoms have scores");
            children.push(ProofNode::Sim {
                func: s.func,
                left: l,
                right: rr,
                score,
            });
        }
        let mut needed: BTreeSet<MergePair> = BTreeSet::new();
        for consts in occurrences(rule, w, db) {
            for (i, &c) in consts.iter().enumerate() {
                for &d in &consts[i + 1..] {
                    if c != d {
                        needed.insert(MergePair::new(c, d));
                    }
                }
            }
        }
        for (i, atom) in rule.body.atoms.iter().enumerate() {
            for (pos, s) in atom.slots.iter().enumerate() {
                if let Slot::Const(Some(c)) = s {
                    let arg = db.fact(w.facts[i]).args[pos];
                    if arg != *c {
                        needed.insert(MergePair::new(arg, *c));
                    }
                }
            }
        }
        for p in needed {
            children.push(self.build(p.left(), p.right())?);
        }
        Ok(ProofNode::Rule {
            pair,
            rule: rule.label.clone(),
            children,
        })
    }
}

/// A proof tree of minimal rule-depth for `(a, b)` in `sol`.
pub fn proof_tree(
    engine: &Engine<'_>,
    sol: &EqRel,
    a: ConstId,
    b: ConstId,
) -> Result<ProofTree, ExplainError> {
    let db = engine.db;
    if a == b || !sol.same(a, b) {
        return Err(ExplainError::NotInSolution(
            db.text(a).to_string(),
            db.text(b).to_string(),
        ));
    }
    let levels = engine.levels_in(sol, LevelsScope::Solution)?;
    let mut builder = Builder {
        engine,
        rules: engine.hard.iter().chain(&engine.soft).collect(),
        sol,
        levels,
        edges: BTreeMap::new(),
    };
    let root = builder.build(a, b)?;
    Ok(ProofTree { root })
}
