//! Which constant pairs get scored: all of them, the cross products of the
//! columns compared by similarity atoms, or only the pairs some rule body can
//! actually reach under the upper bound.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use super::{key, OnDemand, Scorer, SimFunc, SimKey, SimStore};
use crate::engine::{saturate, CRule};
use crate::exec::Exec;
use crate::matcher::{for_each_match, CompiledBody, EvalOptions, View};
use crate::model::{ConstId, Database, EqRel, MergePair};
use crate::spec::{Specification, TransformMode};

fn score_all(db: &Database, scorer: &Scorer, keys: Vec<SimKey>, exec: Exec) -> SimStore {
    let scores = exec.map_min(&keys, 64, |&(f, a, b)| {
        scorer.score(f, db.constant(a), db.constant(b))
    });
    let mut store = SimStore::new();
    for ((f, a, b), s) in keys.into_iter().zip(scores) {
        store.record(f, a, b, s);
    }
    store
}

/// Scores every unordered pair, reflexive ones included, of non-null
/// constants for every function used by `spec`.
pub fn sim_all(db: &Database, spec: &Specification, scorer: &Scorer, exec: Exec) -> SimStore {
    let values: Vec<ConstId> = db.const_ids().filter(|&c| !db.is_null(c)).collect();
    let mut keys = Vec::new();
    for f in spec.sim_funcs() {
        for (i, &a) in values.iter().enumerate() {
            for &b in &values[i..] {
                keys.push((f, a, b));
            }
        }
    }
    score_all(db, scorer, keys, exec)
}

/// Non-null constants found in the columns where `var` occurs in `atoms`.
fn column_values(db: &Database, body: &crate::spec::RuleBody, var: &str) -> BTreeSet<ConstId> {
    let mut out = BTreeSet::new();
    for (rel, pos) in body.positions_of(var) {
        let Some(rid) = db.relation_id(&rel) else { continue };
        for &f in db.facts_of(rid) {
            let c = db.fact(f).args[pos];
            if !db.is_null(c) {
                out.insert(c);
            }
        }
    }
    out
}

/// Scores, for every similarity atom, the cross product of the values in the
/// columns of its two variables.
pub fn sim_cs(db: &Database, spec: &Specification, scorer: &Scorer, exec: Exec) -> SimStore {
    let mut keys: BTreeSet<SimKey> = BTreeSet::new();
    for (body, s) in spec.sim_atoms() {
        let left = column_values(db, body, &s.left);
        let right = column_values(db, body, &s.right);
        for &a in &left {
            for &b in &right {
                keys.insert(key(s.func, a, b));
            }
        }
    }
    score_all(db, scorer, keys.into_iter().collect(), exec)
}

/// The upper-bound merges computed while collecting similarity facts.
#[derive(Clone, Debug)]
pub struct UbEqSet {
    eq: EqRel,
}

impl UbEqSet {
    pub fn eqrel(&self) -> &EqRel {
        &self.eq
    }

    pub fn pairs(&self) -> BTreeSet<MergePair> {
        self.eq.pairs()
    }
}

#[derive(Clone, Debug)]
pub struct SimOpt {
    pub store: SimStore,
    pub ubeq: UbEqSet,
    /// Pairs scored on demand while computing the upper bound.
    pub phase1_calls: usize,
    /// Pairs scored afterwards for the candidate-collection rules.
    pub phase3_calls: usize,
}

/// Three phases: compute the upper bound, scoring a pair only when the rest
/// of a body already matches; derive one candidate-collection rule per
/// similarity atom; evaluate those once modulo the upper bound and score the
/// pairs not seen yet.
pub fn sim_opt(
    db: &Database,
    spec: &Specification,
    scorer: &Scorer,
    opts: EvalOptions,
    exec: Exec,
) -> SimOpt {
    let on_demand = OnDemand::new(db, scorer);
    let rules: Vec<CRule> = spec
        .rules()
        .map(|r| CRule::compile(r, &spec.schema, db))
        .collect();
    let ub = saturate(
        db,
        &rules,
        EqRel::identity(db),
        None,
        &on_demand,
        opts,
        exec,
        None,
    )
    .expect("on-demand scoring never misses");
    let mut store = on_demand.into_store();
    let phase1_calls = store.call_count();

    let program = spec.transform(TransformMode::SimPhase2);
    let view = View::new(db, &ub);
    let mut wanted: BTreeSet<SimKey> = BTreeSet::new();
    for g in &program.getsim {
        let body = CompiledBody::compile(&g.body, &spec.schema, db);
        let (Some(l), Some(r)) = (body.var(&g.left), body.var(&g.right)) else {
            continue;
        };
        let func: SimFunc = g.func;
        for_each_match(&body, None, &view, &store, opts, None, &mut |w| {
            let (a, b) = (w.binding[l], w.binding[r]);
            if !db.is_null(a) && !db.is_null(b) {
                wanted.insert(key(func, a, b));
            }
            ControlFlow::Continue(())
        })
        .expect("candidate rules have no similarity atoms");
    }
    wanted.retain(|&(f, a, b)| !store.contains(f, a, b));
    let fresh = score_all(db, scorer, wanted.into_iter().collect(), exec);
    let phase3_calls = fresh.call_count();
    store.merge_from(fresh);
    SimOpt {
        store,
        ubeq: UbEqSet { eq: ub },
        phase1_calls,
        phase3_calls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Constant;
    use crate::spec::parse_spec;

    fn tiny() -> (Database, Specification) {
        let spec = parse_spec(
            "relation P(pid:id, name:short, city:short) merge [pid];
             soft s: P(x,n,c), P(y,n2,c), sim(n,n2) >= 80 ~> eq(x,y);",
        )
        .unwrap();
        let mut b = Database::builder();
        b.relation("P", 3).unwrap();
        for (p, n, c) in [("p1", "Anna", "Oslo"), ("p2", "Anne", "Oslo"), ("p3", "Bob", "Rome")] {
            b.fact(
                "P",
                vec![Constant::entity(p), Constant::value(n), Constant::value(c)],
            )
            .unwrap();
        }
        (b.build(), spec)
    }

    #[test]
    fn strategies_nest() {
        let (db, spec) = tiny();
        let scorer = Scorer::for_spec(&db, &spec);
        let all = sim_all(&db, &spec, &scorer, Exec::Sequential);
        let cs = sim_cs(&db, &spec, &scorer, Exec::Sequential);
        let opt = sim_opt(&db, &spec, &scorer, EvalOptions::default(), Exec::Sequential);
        // 8 non-null constants: 36 pairs
        assert_eq!(all.call_count(), 36);
        // names: 3 values, 6 pairs
        assert_eq!(cs.call_count(), 6);
        assert!(opt.store.call_count() <= cs.call_count());
        for k in opt.store.keys() {
            assert!(cs.contains(k.0, k.1, k.2));
        }
        for k in cs.keys() {
            assert!(all.contains(k.0, k.1, k.2));
        }
        let (p1, p2) = (db.entity("p1").unwrap(), db.entity("p2").unwrap());
        assert!(opt.ubeq.eqrel().same(p1, p2));
    }

    #[test]
    fn no_sim_atoms_means_no_scores() {
        let spec = parse_spec(
            "relation P(pid:id, city:short) merge [pid];
             hard h: P(x,c), P(y,c) => eq(x,y);",
        )
        .unwrap();
        let mut b = Database::builder();
        b.relation("P", 2).unwrap();
        b.fact("P", vec![Constant::entity("a"), Constant::value("x")]).unwrap();
        b.fact("P", vec![Constant::entity("b"), Constant::value("x")]).unwrap();
        let db = b.build();
        let scorer = Scorer::for_spec(&db, &spec);
        assert!(sim_all(&db, &spec, &scorer, Exec::Sequential).is_empty());
        assert!(sim_cs(&db, &spec, &scorer, Exec::Sequential).is_empty());
        let opt = sim_opt(&db, &spec, &scorer, EvalOptions::default(), Exec::Sequential);
        assert!(opt.store.is_empty());
        assert_eq!(opt.ubeq.pairs().len(), 1);
    }
}
