//! Evaluation of conjunctive bodies over a database modulo an equivalence
//! relation.
//!
//! Joins compare representatives, so evaluating over `(D, E)` here is the
//! same as evaluating over the induced database `D_E` and then expanding
//! every answer to all its preimages. Similarity atoms compare the original
//! constants; under sim-safety those are never merged. A variable that joins
//! two positions never binds the null constant.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::model::{ConstId, Constant, Database, EqRel, FactId, MergePair, RelId};
use crate::sim::{Score, SimFunc, SimSource};
use crate::spec::{AttrType, DenialConstraint, Rule, RuleBody, Schema, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("no similarity score for ({a}, {b}) under `{func}`")]
    MissingSimScore { func: SimFunc, a: String, b: String },
}

/// How `x != y` treats the null constant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NullInequality {
    /// Null differs from every non-null constant, and not from itself.
    #[default]
    Distinct,
    /// Any comparison with null is false.
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub null_inequality: NullInequality,
    /// Missing similarity scores are errors instead of failed atoms.
    pub strict_sims: bool,
    null_join_guard: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            null_inequality: NullInequality::Distinct,
            strict_sims: false,
            null_join_guard: true,
        }
    }
}

impl EvalOptions {
    pub fn with_null_inequality(mut self, n: NullInequality) -> Self {
        self.null_inequality = n;
        self
    }

    /// Lets joins match null against null. Only for mutation tests that check
    /// the guard is what blocks null-driven merges.
    #[doc(hidden)]
    pub fn without_null_join_guard(mut self) -> Self {
        self.null_join_guard = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Var(usize),
    /// `None` when the constant does not occur in the database.
    Const(Option<ConstId>),
}

#[derive(Clone, Debug)]
pub(crate) struct CAtom {
    pub rel: Option<RelId>,
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug)]
pub(crate) struct CSim {
    pub func: SimFunc,
    pub left: usize,
    pub right: usize,
    pub threshold: Score,
}

/// A rule body resolved against one database.
#[derive(Clone, Debug)]
pub struct CompiledBody {
    pub(crate) atoms: Vec<CAtom>,
    pub(crate) sims: Vec<CSim>,
    pub(crate) neqs: Vec<(Slot, Slot)>,
    pub(crate) vars: Vec<String>,
    /// Atom evaluation order when atom `i` is evaluated first.
    orders: Vec<Vec<usize>>,
    default_order: Vec<usize>,
}

impl CompiledBody {
    pub fn compile(body: &RuleBody, schema: &Schema, db: &Database) -> Self {
        let mut vars: Vec<String> = Vec::new();
        let mut var_ty: Vec<AttrType> = Vec::new();
        let mut var_index = |name: &str, ty: AttrType, vars: &mut Vec<String>| -> usize {
            match vars.iter().position(|v| v == name) {
                Some(i) => i,
                None => {
                    vars.push(name.to_string());
                    var_ty.push(ty);
                    vars.len() - 1
                }
            }
        };
        let mut atoms = Vec::new();
        for a in &body.atoms {
            let decl = schema.get(&a.relation);
            let rel = db.relation_id(&a.relation);
            let slots = a
                .terms
                .iter()
                .enumerate()
                .map(|(pos, t)| {
                    let ty = decl.map(|d| d.attrs[pos].ty).unwrap_or(AttrType::Val);
                    match t {
                        Term::Var(v) => Slot::Var(var_index(v, ty, &mut vars)),
                        Term::Const(c) => {
                            let constant = if ty == AttrType::Id {
                                Constant::entity(c.as_str())
                            } else {
                                Constant::value(c.as_str())
                            };
                            Slot::Const(db.id_of(&constant))
                        }
                    }
                })
                .collect();
            atoms.push(CAtom { rel, slots });
        }
        let lookup = |v: &str, vars: &[String]| vars.iter().position(|x| x == v);
        let sims = body
            .sims
            .iter()
            .map(|s| CSim {
                func: s.func,
                left: lookup(&s.left, &vars).expect("sim variables are bound by relational atoms"),
                right: lookup(&s.right, &vars).expect("sim variables are bound by relational atoms"),
                threshold: s.threshold,
            })
            .collect();
        let slot_of = |t: &Term, other: &Term, vars: &[String]| match t {
            Term::Var(v) => Slot::Var(lookup(v, vars).expect("inequality variables are bound")),
            Term::Const(c) => {
                let id_typed = other
                    .var()
                    .and_then(|v| lookup(v, vars))
                    .is_some_and(|i| var_ty[i] == AttrType::Id);
                let constant = if id_typed {
                    Constant::entity(c.as_str())
                } else {
                    Constant::value(c.as_str())
                };
                Slot::Const(db.id_of(&constant))
            }
        };
        let neqs: Vec<(Slot, Slot)> = body
            .neqs
            .iter()
            .map(|n| (slot_of(&n.left, &n.right, &vars), slot_of(&n.right, &n.left, &vars)))
            .collect();

        let orders = (0..atoms.len()).map(|i| plan(&atoms, Some(i))).collect();
        let default_order = plan(&atoms, None);
        Self {
            atoms,
            sims,
            neqs,
            vars,
            orders,
            default_order,
        }
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }
}

/// Greedy join order: after the first atom, always take the atom with the
/// most already-bound slots.
fn plan(atoms: &[CAtom], first: Option<usize>) -> Vec<usize> {
    let mut bound = BTreeSet::new();
    let mut order = Vec::with_capacity(atoms.len());
    let mut left: Vec<usize> = (0..atoms.len()).collect();
    let boundness = |a: &CAtom, bound: &BTreeSet<usize>| {
        a.slots
            .iter()
            .filter(|s| match s {
                Slot::Var(v) => bound.contains(v),
                Slot::Const(_) => true,
            })
            .count()
    };
    let mut take = |idx: usize, left: &mut Vec<usize>, bound: &mut BTreeSet<usize>| {
        left.retain(|&x| x != idx);
        for s in &atoms[idx].slots {
            if let Slot::Var(v) = s {
                bound.insert(*v);
            }
        }
        order.push(idx);
    };
    if let Some(f) = first {
        take(f, &mut left, &mut bound);
    }
    while !left.is_empty() {
        let best = *left
            .iter()
            .max_by(|&&a, &&b| {
                boundness(&atoms[a], &bound)
                    .cmp(&boundness(&atoms[b], &bound))
                    .then(b.cmp(&a))
            })
            .expect("non-empty");
        take(best, &mut left, &mut bound);
    }
    order
}

/// Per-position hash indexes of a database keyed by representative under
/// one equivalence relation.
pub struct View<'a> {
    pub(crate) db: &'a Database,
    pub(crate) e: &'a EqRel,
    reps: Vec<ConstId>,
    index: HashMap<(RelId, usize, ConstId), Vec<FactId>>,
}

impl<'a> View<'a> {
    pub fn new(db: &'a Database, e: &'a EqRel) -> Self {
        let reps: Vec<ConstId> = db.const_ids().map(|c| e.rep(c)).collect();
        let mut index: HashMap<(RelId, usize, ConstId), Vec<FactId>> = HashMap::new();
        for (fid, f) in db.facts().iter().enumerate() {
            for (pos, a) in f.args.iter().enumerate() {
                index
                    .entry((f.relation, pos, reps[a.index()]))
                    .or_default()
                    .push(fid);
            }
        }
        Self { db, e, reps, index }
    }

    #[inline]
    pub fn rep(&self, c: ConstId) -> ConstId {
        self.reps[c.index()]
    }

    pub fn eqrel(&self) -> &EqRel {
        self.e
    }
}

/// One satisfying assignment: the fact used for each relational atom (in
/// body order) and the first-occurrence constant of each variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Witness {
    pub facts: Vec<FactId>,
    pub binding: Vec<ConstId>,
}

/// Restricts atom `atom` to a subset of facts (semi-naive deltas).
pub(crate) struct Delta<'d> {
    pub atom: usize,
    pub facts: &'d [FactId],
}

struct Search<'s, 'a> {
    body: &'s CompiledBody,
    view: &'s View<'a>,
    sims: &'s dyn SimSource,
    opts: EvalOptions,
    head: Option<(usize, usize)>,
    binding: Vec<Option<ConstId>>,
    chosen: Vec<FactId>,
}

impl Search<'_, '_> {
    fn db(&self) -> &Database {
        self.view.db
    }

    fn run(
        &mut self,
        order: &[usize],
        delta: Option<&Delta<'_>>,
        emit: &mut dyn FnMut(&Witness) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, MatchError> {
        self.step(order, 0, delta, emit)
    }

    fn step(
        &mut self,
        order: &[usize],
        depth: usize,
        delta: Option<&Delta<'_>>,
        emit: &mut dyn FnMut(&Witness) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, MatchError> {
        if depth == order.len() {
            return self.finish(emit);
        }
        let ai = order[depth];
        let atom = &self.body.atoms[ai];
        let Some(rel) = atom.rel else {
            return Ok(ControlFlow::Continue(()));
        };
        let candidates: Vec<FactId> = match delta {
            Some(d) if d.atom == ai => d
                .facts
                .iter()
                .copied()
                .filter(|&f| self.db().fact(f).relation == rel)
                .collect(),
            _ => {
                let mut probe = None;
                for (pos, s) in atom.slots.iter().enumerate() {
                    match *s {
                        Slot::Const(None) => return Ok(ControlFlow::Continue(())),
                        Slot::Const(Some(c)) => {
                            probe = Some((pos, c));
                            break;
                        }
                        Slot::Var(v) => {
                            if let Some(c) = self.binding[v] {
                                probe = Some((pos, c));
                                break;
                            }
                        }
                    }
                }
                match probe {
                    Some((pos, c)) => self
                        .view
                        .index
                        .get(&(rel, pos, self.view.rep(c)))
                        .cloned()
                        .unwrap_or_default(),
                    None => self.db().facts_of(rel).to_vec(),
                }
            }
        };
        for fid in candidates {
            let mut newly = Vec::new();
            if self.matches(ai, fid, &mut newly) {
                self.chosen[ai] = fid;
                let flow = self.step(order, depth + 1, delta, emit)?;
                for v in newly.drain(..) {
                    self.binding[v] = None;
                }
                if flow.is_break() {
                    return Ok(flow);
                }
            } else {
                for v in newly.drain(..) {
                    self.binding[v] = None;
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    fn matches(&mut self, ai: usize, fid: FactId, newly: &mut Vec<usize>) -> bool {
        let db = self.view.db;
        let fact = db.fact(fid);
        for (pos, s) in self.body.atoms[ai].slots.iter().enumerate() {
            let arg = fact.args[pos];
            match *s {
                Slot::Const(None) => return false,
                Slot::Const(Some(c)) => {
                    if db.is_null(arg) || self.view.rep(arg) != self.view.rep(c) {
                        return false;
                    }
                }
                Slot::Var(v) => match self.binding[v] {
                    Some(b) => {
                        if self.opts.null_join_guard && (db.is_null(arg) || db.is_null(b)) {
                            return false;
                        }
                        if self.view.rep(arg) != self.view.rep(b) {
                            return false;
                        }
                    }
                    None => {
                        self.binding[v] = Some(arg);
                        newly.push(v);
                    }
                },
            }
        }
        true
    }

    fn slot_value(&self, s: Slot) -> Option<ConstId> {
        match s {
            Slot::Var(v) => self.binding[v],
            Slot::Const(c) => c,
        }
    }

    fn finish(
        &mut self,
        emit: &mut dyn FnMut(&Witness) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, MatchError> {
        let db = self.view.db;
        if let Some((x, y)) = self.head {
            for v in [x, y] {
                match self.binding[v] {
                    Some(c) if db.is_entity(c) => {}
                    _ => return Ok(ControlFlow::Continue(())),
                }
            }
        }
        for &(l, r) in &self.body.neqs {
            let (Some(a), Some(b)) = (self.slot_value(l), self.slot_value(r)) else {
                // a constant outside the domain differs from everything
                let other = self.slot_value(l).or(self.slot_value(r));
                if other.is_some_and(|o| db.is_null(o))
                    && self.opts.null_inequality == NullInequality::Fail
                {
                    return Ok(ControlFlow::Continue(()));
                }
                continue;
            };
            let holds = match (db.is_null(a), db.is_null(b)) {
                (false, false) => self.view.rep(a) != self.view.rep(b),
                (true, true) => false,
                _ => self.opts.null_inequality == NullInequality::Distinct,
            };
            if !holds {
                return Ok(ControlFlow::Continue(()));
            }
        }
        for s in &self.body.sims {
            let (a, b) = (
                self.binding[s.left].expect("bound"),
                self.binding[s.right].expect("bound"),
            );
            if db.is_null(a) || db.is_null(b) {
                return Ok(ControlFlow::Continue(()));
            }
            match self.sims.score(s.func, a, b) {
                Some(score) if score >= s.threshold => {}
                Some(_) => return Ok(ControlFlow::Continue(())),
                None if self.opts.strict_sims => {
                    return Err(MatchError::MissingSimScore {
                        func: s.func,
                        a: db.text(a).to_string(),
                        b: db.text(b).to_string(),
                    })
                }
                None => return Ok(ControlFlow::Continue(())),
            }
        }
        let w = Witness {
            facts: self.chosen.clone(),
            binding: self.binding.iter().map(|b| b.expect("all variables bound")).collect(),
        };
        Ok(emit(&w))
    }
}

/// Calls `emit` for every satisfying assignment of `body` over `view`.
pub(crate) fn for_each_match(
    body: &CompiledBody,
    head: Option<(usize, usize)>,
    view: &View<'_>,
    sims: &dyn SimSource,
    opts: EvalOptions,
    delta: Option<&Delta<'_>>,
    emit: &mut dyn FnMut(&Witness) -> ControlFlow<()>,
) -> Result<(), MatchError> {
    let order = match delta {
        Some(d) => &body.orders[d.atom],
        None => &body.default_order,
    };
    let mut s = Search {
        body,
        view,
        sims,
        opts,
        head,
        binding: vec![None; body.vars.len()],
        chosen: vec![0; body.atoms.len()],
    };
    let _ = s.run(order, delta, emit)?;
    Ok(())
}

/// Answers to a binary query `q(x, y)` with respect to `(D, E)`.
#[derive(Clone, Debug, Default)]
pub struct AnswerSet {
    /// Head constants as bound by the witness, with the first witness found.
    pub answers: BTreeMap<(ConstId, ConstId), Witness>,
}

impl AnswerSet {
    /// Answer pairs up to E, canonical, reflexive ones included.
    pub fn rep_pairs(&self, e: &EqRel) -> BTreeSet<MergePair> {
        self.answers
            .keys()
            .map(|&(a, b)| MergePair::new(e.rep(a), e.rep(b)))
            .collect()
    }

    /// Whether `(a, b)` is an answer, i.e. some witnessed answer is E-equivalent
    /// to it componentwise.
    pub fn contains(&self, e: &EqRel, a: ConstId, b: ConstId) -> bool {
        self.answers
            .keys()
            .any(|&(x, y)| e.same(x, a) && e.same(y, b))
    }

    /// Every preimage tuple: all `(c, d)` with `(rep c, rep d)` an answer over
    /// the induced database.
    pub fn expand(&self, e: &EqRel) -> BTreeSet<(ConstId, ConstId)> {
        let mut out = BTreeSet::new();
        for &(x, y) in self.answers.keys() {
            for c in e.class_of(x) {
                for d in e.class_of(y) {
                    out.insert((c, d));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

/// Rule and constraint evaluation over one database.
pub struct Matcher<'a> {
    db: &'a Database,
    schema: &'a Schema,
    opts: EvalOptions,
}

impl<'a> Matcher<'a> {
    pub fn new(db: &'a Database, schema: &'a Schema) -> Self {
        Self {
            db,
            schema,
            opts: EvalOptions::default(),
        }
    }

    pub fn with_options(mut self, opts: EvalOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn answers(
        &self,
        body: &RuleBody,
        head: (&str, &str),
        e: &EqRel,
        sims: &dyn SimSource,
    ) -> Result<AnswerSet, MatchError> {
        let cb = CompiledBody::compile(body, self.schema, self.db);
        let view = View::new(self.db, e);
        let (Some(x), Some(y)) = (cb.var(head.0), cb.var(head.1)) else {
            return Ok(AnswerSet::default());
        };
        let mut out = AnswerSet::default();
        for_each_match(&cb, Some((x, y)), &view, sims, self.opts, None, &mut |w| {
            out.answers
                .entry((w.binding[x], w.binding[y]))
                .or_insert_with(|| w.clone());
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }

    /// `q(D, E) ⊆ E`.
    pub fn rule_satisfied(
        &self,
        rule: &Rule,
        e: &EqRel,
        sims: &dyn SimSource,
    ) -> Result<bool, MatchError> {
        let a = self.answers(&rule.body, (&rule.head.0, &rule.head.1), e, sims)?;
        Ok(a.answers.keys().all(|&(x, y)| e.same(x, y)))
    }

    /// No assignment satisfies the constraint body over `D_E`.
    pub fn dc_satisfied(&self, dc: &DenialConstraint, e: &EqRel) -> bool {
        let cb = CompiledBody::compile(&dc.body, self.schema, self.db);
        let view = View::new(self.db, e);
        dc_holds(&cb, &view, self.opts)
    }
}

pub(crate) fn dc_holds(cb: &CompiledBody, view: &View<'_>, opts: EvalOptions) -> bool {
    let none = crate::sim::SimStore::new();
    let mut violated = false;
    for_each_match(cb, None, view, &none, opts, None, &mut |_| {
        violated = true;
        ControlFlow::Break(())
    })
    .expect("constraints have no similarity atoms");
    !violated
}
