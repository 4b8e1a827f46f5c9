//! Minimum rule depth of every merge in a solution, by enumerating rule
//! applications over the original facts.
//!
//! A rule application assigns each body atom a fact. Occurrences of the same
//! variable that hold different constants, and constants in the body that
//! differ from the fact, become merges the application needs. A merge has a
//! proof of rule depth at most k iff it is in the transitive closure of the
//! applications whose needed merges all have proofs of depth at most k - 1.

use std::collections::{BTreeMap, BTreeSet};

use er_core::spec::{AttrType, Rule, Term};
use er_core::{ConstId, Constant, Database, EqRel, MergePair, SimStore, Specification};

struct Application {
    head: MergePair,
    needs: Vec<MergePair>,
}

fn applications(db: &Database, spec: &Specification, sims: &SimStore, rule: &Rule, sol: &EqRel) -> Vec<Application> {
    let mut out = Vec::new();
    let per_atom: Vec<Vec<usize>> = rule
        .body
        .atoms
        .iter()
        .map(|a| {
            (0..db.len())
                .filter(|&f| db.relation(db.fact(f).relation).name == a.relation)
                .collect()
        })
        .collect();
    if per_atom.iter().any(Vec::is_empty) {
        return out;
    }
    let mut choice = vec![0usize; per_atom.len()];
    'outer: loop {
        if let Some(app) = apply(db, spec, sims, rule, sol, &per_atom, &choice) {
            out.extend(app);
        }
        for i in (0..choice.len()).rev() {
            choice[i] += 1;
            if choice[i] < per_atom[i].len() {
                continue 'outer;
            }
            choice[i] = 0;
        }
        break;
    }
    out
}

fn apply(
    db: &Database,
    spec: &Specification,
    sims: &SimStore,
    rule: &Rule,
    sol: &EqRel,
    per_atom: &[Vec<usize>],
    choice: &[usize],
) -> Option<Vec<Application>> {
    let mut occ: BTreeMap<&str, Vec<ConstId>> = BTreeMap::new();
    let mut needs: BTreeSet<MergePair> = BTreeSet::new();
    for (i, atom) in rule.body.atoms.iter().enumerate() {
        let fact = db.fact(per_atom[i][choice[i]]);
        let decl = spec.schema.get(&atom.relation)?;
        for (pos, t) in atom.terms.iter().enumerate() {
            let c = fact.args[pos];
            match t {
                Term::Var(v) => occ.entry(v.as_str()).or_default().push(c),
                Term::Const(text) => {
                    let want = if decl.attrs[pos].ty == AttrType::Id {
                        Constant::entity(text.as_str())
                    } else {
                        Constant::value(text.as_str())
                    };
                    let k = db.id_of(&want)?;
                    if k != c {
                        if db.is_null(c) {
                            return None;
                        }
                        needs.insert(MergePair::new(c, k));
                    }
                }
            }
        }
    }
    for consts in occ.values() {
        if consts.len() > 1 && consts.iter().any(|&c| db.is_null(c)) {
            return None;
        }
        for &a in consts {
            for &b in consts {
                if a < b {
                    needs.insert(MergePair::new(a, b));
                }
            }
        }
    }
    if needs.iter().any(|p| !sol.same(p.left(), p.right())) {
        return None;
    }
    for s in &rule.body.sims {
        let (a, b) = (occ[s.left.as_str()][0], occ[s.right.as_str()][0]);
        if db.is_null(a) || db.is_null(b) {
            return None;
        }
        match sims.get(s.func, a, b) {
            Some(score) if score >= s.threshold => {}
            _ => return None,
        }
    }
    let mut out = Vec::new();
    for &x in &occ[rule.head.0.as_str()] {
        for &y in &occ[rule.head.1.as_str()] {
            if x != y && db.is_entity(x) && db.is_entity(y) && sol.same(x, y) {
                out.push(Application {
                    head: MergePair::new(x, y),
                    needs: needs.iter().copied().collect(),
                });
            }
        }
    }
    Some(out)
}

/// Pairs reachable from `base` by chaining, as a set of unordered pairs.
fn closure(base: &BTreeSet<MergePair>) -> BTreeSet<MergePair> {
    let mut adj: BTreeMap<ConstId, BTreeSet<ConstId>> = BTreeMap::new();
    for p in base {
        adj.entry(p.left()).or_default().insert(p.right());
        adj.entry(p.right()).or_default().insert(p.left());
    }
    let mut out = BTreeSet::new();
    for &start in adj.keys() {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            for &d in &adj[&c] {
                if seen.insert(d) {
                    stack.push(d);
                }
            }
        }
        for &d in &seen {
            if d != start {
                out.insert(MergePair::new(start, d));
            }
        }
    }
    out
}

pub fn min_rule_depths(
    db: &Database,
    spec: &Specification,
    sims: &SimStore,
    sol: &EqRel,
) -> BTreeMap<MergePair, usize> {
    let apps: Vec<Application> = spec
        .rules()
        .flat_map(|r| applications(db, spec, sims, r, sol))
        .collect();
    let mut depth: BTreeMap<MergePair, usize> = BTreeMap::new();
    let mut proved: BTreeSet<MergePair> = BTreeSet::new();
    for k in 1.. {
        let base: BTreeSet<MergePair> = apps
            .iter()
            .filter(|a| a.needs.iter().all(|p| proved.contains(p)))
            .map(|a| a.head)
            .collect();
        let next = closure(&base);
        if next == proved {
            break;
        }
        for p in &next {
            depth.entry(*p).or_insert(k);
        }
        proved = next;
    }
    depth
}
