//! Exhaustive enumeration of solutions straight from the definitions, used
//! to check the search in tests.
//!
//! Rules are evaluated by plain nested loops over the induced database, and
//! the candidate relation is explored one answer at a time with hard and
//! soft rules alike. Nothing here shares code with the matcher or search.

use std::collections::{BTreeMap, HashSet, VecDeque};

use super::EngineError;
use crate::matcher::{EvalOptions, NullInequality};
use crate::model::{ConstId, Constant, Database, EqRel};
use crate::sim::SimSource;
use crate::spec::{AttrType, RuleBody, Specification, Term};

pub const BRUTEFORCE_ENTITY_LIMIT: usize = 20;

type Env = BTreeMap<String, ConstId>;

struct Naive<'a> {
    db: &'a Database,
    spec: &'a Specification,
    sims: &'a dyn SimSource,
    opts: EvalOptions,
    /// Induced facts: relation name and representative arguments.
    facts: Vec<(String, Vec<ConstId>)>,
}

impl<'a> Naive<'a> {
    fn new(
        db: &'a Database,
        spec: &'a Specification,
        sims: &'a dyn SimSource,
        opts: EvalOptions,
        e: &EqRel,
    ) -> Self {
        let mut facts: Vec<(String, Vec<ConstId>)> = db
            .facts()
            .iter()
            .map(|f| {
                (
                    db.relation(f.relation).name.clone(),
                    f.args.iter().map(|&a| e.rep(a)).collect(),
                )
            })
            .collect();
        facts.sort();
        facts.dedup();
        Self {
            db,
            spec,
            sims,
            opts,
            facts,
        }
    }

    fn term_const(&self, text: &str, entity: bool) -> Option<ConstId> {
        let c = if entity {
            Constant::entity(text)
        } else {
            Constant::value(text)
        };
        self.db.id_of(&c)
    }

    fn var_is_id(&self, body: &RuleBody, v: &str) -> bool {
        body.atoms.iter().any(|a| {
            a.terms.iter().enumerate().any(|(i, t)| {
                t.var() == Some(v)
                    && self
                        .spec
                        .schema
                        .get(&a.relation)
                        .is_some_and(|d| d.attrs[i].ty == AttrType::Id)
            })
        })
    }

    /// All satisfying environments of `body`, keyed by variable name.
    fn eval(&self, body: &RuleBody) -> Vec<Env> {
        let mut occurrences: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &body.atoms {
            for t in &a.terms {
                if let Some(v) = t.var() {
                    *occurrences.entry(v).or_default() += 1;
                }
            }
        }
        let mut out = Vec::new();
        self.extend(body, 0, &mut Env::new(), &occurrences, &mut out);
        out.retain(|env| self.filters_hold(body, env));
        out
    }

    fn extend(
        &self,
        body: &RuleBody,
        i: usize,
        env: &mut Env,
        occ: &BTreeMap<&str, usize>,
        out: &mut Vec<Env>,
    ) {
        if i == body.atoms.len() {
            out.push(env.clone());
            return;
        }
        let atom = &body.atoms[i];
        let decl = self.spec.schema.get(&atom.relation);
        'facts: for (rel, args) in &self.facts {
            if *rel != atom.relation || args.len() != atom.terms.len() {
                continue;
            }
            let mut added = Vec::new();
            for (pos, t) in atom.terms.iter().enumerate() {
                let c = args[pos];
                let ok = match t {
                    Term::Const(text) => {
                        let entity = decl.is_some_and(|d| d.attrs[pos].ty == AttrType::Id);
                        !self.db.is_null(c) && self.term_const(text, entity) == Some(c)
                    }
                    Term::Var(v) => {
                        let joins = occ[v.as_str()] > 1;
                        if joins && self.db.is_null(c) {
                            false
                        } else {
                            match env.get(v) {
                                Some(&b) => b == c,
                                None => {
                                    env.insert(v.clone(), c);
                                    added.push(v.clone());
                                    true
                                }
                            }
                        }
                    }
                };
                if !ok {
                    for v in &added {
                        env.remove(v);
                    }
                    continue 'facts;
                }
            }
            self.extend(body, i + 1, env, occ, out);
            for v in &added {
                env.remove(v);
            }
        }
    }

    fn filters_hold(&self, body: &RuleBody, env: &Env) -> bool {
        for n in &body.neqs {
            let side = |t: &Term, other: &Term| match t {
                Term::Var(v) => Some(env[v.as_str()]),
                Term::Const(text) => {
                    let entity = other.var().is_some_and(|v| self.var_is_id(body, v));
                    self.term_const(text, entity)
                }
            };
            let l = side(&n.left, &n.right);
            let r = side(&n.right, &n.left);
            let null = |c: Option<ConstId>| c.is_some_and(|c| self.db.is_null(c));
            let holds = match (null(l), null(r)) {
                (true, true) => false,
                (true, false) | (false, true) => {
                    self.opts.null_inequality == NullInequality::Distinct
                }
                (false, false) => l != r || l.is_none(),
            };
            if !holds {
                return false;
            }
        }
        for s in &body.sims {
            let (a, b) = (env[s.left.as_str()], env[s.right.as_str()]);
            if self.db.is_null(a) || self.db.is_null(b) {
                return false;
            }
            match self.sims.score(s.func, a, b) {
                Some(score) if score >= s.threshold => {}
                _ => return false,
            }
        }
        true
    }

    /// Representative pairs answering the rule, reflexive ones included.
    fn rule_answers(&self, body: &RuleBody, head: &(String, String)) -> Vec<(ConstId, ConstId)> {
        let mut out: Vec<(ConstId, ConstId)> = self
            .eval(body)
            .into_iter()
            .map(|env| (env[head.0.as_str()], env[head.1.as_str()]))
            .filter(|(a, b)| self.db.is_entity(*a) && self.db.is_entity(*b))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Every solution of `(db, spec)` by breadth-first search over the
/// candidate relation. Refuses databases with more than
/// [`BRUTEFORCE_ENTITY_LIMIT`] entity references.
pub fn bruteforce_solutions(
    db: &Database,
    spec: &Specification,
    sims: &dyn SimSource,
    opts: EvalOptions,
) -> Result<Vec<EqRel>, EngineError> {
    let entities = db.entity_count();
    if entities > BRUTEFORCE_ENTITY_LIMIT {
        return Err(EngineError::DomainTooLarge {
            entities,
            limit: BRUTEFORCE_ENTITY_LIMIT,
        });
    }
    let start = EqRel::identity(db);
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    seen.insert(start.signature());
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(e) = queue.pop_front() {
        let naive = Naive::new(db, spec, sims, opts, &e);
        let mut candidates = Vec::new();
        let mut hard_ok = true;
        for rule in spec.rules() {
            for (a, b) in naive.rule_answers(&rule.body, &rule.head) {
                if a != b {
                    candidates.push((a, b));
                    if rule.kind == crate::spec::RuleKind::Hard {
                        hard_ok = false;
                    }
                }
            }
        }
        let dcs_ok = spec.dcs.iter().all(|d| naive.eval(&d.body).is_empty());
        if hard_ok && dcs_ok {
            out.push(e.clone());
        }
        for (a, b) in candidates {
            let mut next = e.clone();
            next.union(a, b)?;
            next.compress();
            if seen.insert(next.signature()) {
                queue.push_back(next);
            }
        }
    }
    Ok(out)
}
