//! Checks a proof tree against the definition, clause by clause, working
//! from the rule text rather than from compiled bodies.

use std::collections::{BTreeMap, BTreeSet};

use super::{ProofNode, ProofTree};
use crate::model::{ConstId, Constant, Database, EqRel};
use crate::sim::SimSource;
use crate::spec::{AttrType, Specification, Term};

fn unordered(a: ConstId, b: ConstId) -> (ConstId, ConstId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

struct Checker<'a> {
    db: &'a Database,
    spec: &'a Specification,
    sol: &'a EqRel,
    sims: &'a dyn SimSource,
}

impl Checker<'_> {
    fn merge_label(&self, (d, e): (ConstId, ConstId)) -> Result<(), String> {
        if d == e {
            return Err(format!("reflexive merge node ({})", self.db.text(d)));
        }
        if !self.sol.same(d, e) {
            return Err(format!(
                "merge node ({}, {}) is not in the solution",
                self.db.text(d),
                self.db.text(e)
            ));
        }
        Ok(())
    }

    fn node(&self, node: &ProofNode) -> Result<(), String> {
        match node {
            ProofNode::Fact(f) => {
                if *f >= self.db.len() {
                    return Err(format!("fact #{f} is not in the database"));
                }
                Ok(())
            }
            ProofNode::Sim { .. } => Ok(()),
            ProofNode::Transitive { pair, children } => {
                self.merge_label(*pair)?;
                let [c1, c2] = children.as_slice() else {
                    return Err("transitive node needs exactly two children".into());
                };
                let (Some(p1), Some(p2)) = (c1.pair(), c2.pair()) else {
                    return Err("transitive node children must be merges".into());
                };
                let (d, e) = *pair;
                let chains = |x: (ConstId, ConstId), y: (ConstId, ConstId)| {
                    [x.0, x.1].iter().any(|&f| {
                        unordered(x.0, x.1) == unordered(d, f) && unordered(y.0, y.1) == unordered(f, e)
                    })
                };
                if !(chains(p1, p2) || chains(p2, p1)) {
                    return Err(format!(
                        "transitive node ({}, {}) does not chain its children",
                        self.db.text(d),
                        self.db.text(e)
                    ));
                }
                self.node(c1)?;
                self.node(c2)
            }
            ProofNode::Rule {
                pair,
                rule,
                children,
            } => {
                self.merge_label(*pair)?;
                self.rule_node(*pair, rule, children)?;
                for c in children {
                    self.node(c)?;
                }
                Ok(())
            }
        }
    }

    fn rule_node(
        &self,
        (d, e): (ConstId, ConstId),
        label: &str,
        children: &[ProofNode],
    ) -> Result<(), String> {
        let db = self.db;
        let rule = self
            .spec
            .rule(label)
            .ok_or_else(|| format!("unknown rule `{label}`"))?;
        let facts: Vec<usize> = children
            .iter()
            .filter_map(|c| match c {
                ProofNode::Fact(f) => Some(*f),
                _ => None,
            })
            .collect();
        if facts.len() != rule.body.atoms.len() {
            return Err(format!(
                "rule node `{label}` has {} fact children for {} atoms",
                facts.len(),
                rule.body.atoms.len()
            ));
        }
        let mut occ: BTreeMap<&str, Vec<ConstId>> = BTreeMap::new();
        let mut required: BTreeSet<(ConstId, ConstId)> = BTreeSet::new();
        for (atom, &f) in rule.body.atoms.iter().zip(&facts) {
            let fact = db.fact(f);
            if db.relation(fact.relation).name != atom.relation || fact.args.len() != atom.terms.len() {
                return Err(format!(
                    "{} does not instantiate {}",
                    db.render_fact(f),
                    atom.relation
                ));
            }
            let decl = self.spec.schema.get(&atom.relation);
            for (pos, t) in atom.terms.iter().enumerate() {
                let c = fact.args[pos];
                match t {
                    Term::Var(v) => occ.entry(v.as_str()).or_default().push(c),
                    Term::Const(text) => {
                        let id_typed = decl.is_some_and(|d| d.attrs[pos].ty == AttrType::Id);
                        let want = if id_typed {
                            Constant::entity(text.as_str())
                        } else {
                            Constant::value(text.as_str())
                        };
                        match db.id_of(&want) {
                            Some(k) if k == c => {}
                            Some(k) if !db.is_null(c) => {
                                required.insert(unordered(c, k));
                            }
                            _ => return Err(format!("{} does not match constant {text}", db.render_fact(f))),
                        }
                    }
                }
            }
        }
        for (v, consts) in &occ {
            if consts.len() > 1 && consts.iter().any(|&c| db.is_null(c)) {
                return Err(format!("variable {v} joins through null in `{label}`"));
            }
            for (i, &a) in consts.iter().enumerate() {
                for &b in &consts[i + 1..] {
                    if a != b {
                        required.insert(unordered(a, b));
                    }
                }
            }
        }
        let xs = &occ[rule.head.0.as_str()];
        let ys = &occ[rule.head.1.as_str()];
        let head_ok = xs.iter().any(|&c| {
            ys.iter()
                .any(|&k| unordered(c, k) == unordered(d, e) && db.is_entity(c) && db.is_entity(k))
        });
        if !head_ok {
            return Err(format!(
                "`{label}` does not derive ({}, {})",
                db.text(d),
                db.text(e)
            ));
        }
        let merges: BTreeSet<(ConstId, ConstId)> = children
            .iter()
            .filter_map(|c| c.pair().map(|(a, b)| unordered(a, b)))
            .collect();
        if merges != required {
            return Err(format!(
                "rule node `{label}` has merge children {} but its facts need {}",
                merges.len(),
                required.len()
            ));
        }
        let sim_children: BTreeSet<(crate::sim::SimFunc, ConstId, ConstId)> = children
            .iter()
            .filter_map(|c| match c {
                ProofNode::Sim {
                    func, left, right, ..
                } => {
                    let (a, b) = unordered(*left, *right);
                    Some((*func, a, b))
                }
                _ => None,
            })
            .collect();
        let mut sims_needed = BTreeSet::new();
        for s in &rule.body.sims {
            let a = occ[s.left.as_str()][0];
            let b = occ[s.right.as_str()][0];
            if db.is_null(a) || db.is_null(b) {
                return Err(format!("similarity atom over null in `{label}`"));
            }
            match self.sims.score(s.func, a, b) {
                Some(score) if score >= s.threshold => {}
                _ => {
                    return Err(format!(
                        "{} and {} are not similar enough for `{label}`",
                        db.text(a),
                        db.text(b)
                    ))
                }
            }
            let (a, b) = unordered(a, b);
            sims_needed.insert((s.func, a, b));
        }
        if sim_children != sims_needed {
            return Err(format!("rule node `{label}` has the wrong similarity leaves"));
        }
        for c in children {
            if let ProofNode::Sim {
                func,
                left,
                right,
                score,
            } = c
            {
                if self.sims.score(*func, *left, *right) != Some(*score) {
                    return Err("similarity leaf carries a wrong score".into());
                }
            }
        }
        Ok(())
    }
}

/// `Ok` iff `tree` is a proof tree for `(a, b)` in `sol`.
pub fn validate(
    tree: &ProofTree,
    db: &Database,
    spec: &Specification,
    sims: &dyn SimSource,
    sol: &EqRel,
    (a, b): (ConstId, ConstId),
) -> Result<(), String> {
    match tree.root.pair() {
        Some((d, e)) if unordered(d, e) == unordered(a, b) => {}
        _ => return Err("root is not labelled with the explained merge".into()),
    }
    Checker { db, spec, sol, sims }.node(&tree.root)
}
