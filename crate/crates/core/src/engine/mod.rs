//! Solution-space computations: bounds, solutions, maximal solutions,
//! possible and certain merges, and levels.

mod fixpoint;
mod levels;
mod oracle;
mod search;

pub use fixpoint::Step;
pub use levels::{LevelMap, LevelsScope};
pub use oracle::{bruteforce_solutions, BRUTEFORCE_ENTITY_LIMIT};

pub(crate) use fixpoint::{open_answers, saturate, CRule};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::exec::Exec;
use crate::matcher::{dc_holds, CompiledBody, EvalOptions, MatchError, Matcher, View};
use crate::model::{ConstId, Database, EqRel, MergePair, ModelError};
use crate::sim::{SimSource, SimStore};
use crate::spec::{AttrType, DenialConstraint, Specification, Term, TransformMode};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the given equivalence relation is not a solution")]
    NotASolution,
    #[error("{entities} entity references exceed the brute-force limit of {limit}")]
    DomainTooLarge { entities: usize, limit: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineOptions {
    pub eval: EvalOptions,
    pub exec: Exec,
    pub levels_scope: LevelsScope,
}

/// An accepted equivalence relation plus the rule applications that built it.
#[derive(Clone, Debug)]
pub struct Solution {
    pub eq: EqRel,
    pub derivation: Vec<Step>,
}

impl Solution {
    pub fn pairs(&self) -> BTreeSet<MergePair> {
        self.eq.pairs()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MergeSets {
    pub lb: BTreeSet<MergePair>,
    pub ub: BTreeSet<MergePair>,
    pub pm: BTreeSet<MergePair>,
    pub cm: BTreeSet<MergePair>,
    /// False when there is no solution; `pm` and `cm` are then empty.
    pub consistent: bool,
}

pub(crate) struct CDc {
    pub body: CompiledBody,
    /// Once violated, stays violated under any further merge.
    pub monotone: bool,
}

/// A constraint stays violated under more merges when its inequalities only
/// compare values: every variable in them sits at non-id positions only and
/// no constant in them is an entity reference.
pub fn is_merge_monotone(dc: &DenialConstraint, spec: &Specification) -> bool {
    let non_id_var = |v: &str| {
        dc.body.atoms.iter().all(|a| {
            let decl = spec.schema.get(&a.relation);
            a.terms.iter().enumerate().all(|(i, t)| {
                t.var() != Some(v) || decl.is_some_and(|d| d.attrs[i].ty != AttrType::Id)
            })
        })
    };
    dc.body.neqs.iter().all(|n| {
        [(&n.left, &n.right), (&n.right, &n.left)]
            .iter()
            .all(|(t, other)| match t {
                Term::Var(v) => non_id_var(v),
                // a constant is an entity reference iff it is compared with an id-typed variable
                Term::Const(_) => other.var().map_or(true, non_id_var),
            })
    })
}

pub struct Engine<'a> {
    pub(crate) db: &'a Database,
    pub(crate) spec: &'a Specification,
    pub(crate) sims: &'a dyn SimSource,
    pub(crate) opts: EngineOptions,
    pub(crate) hard: Vec<CRule>,
    pub(crate) soft: Vec<CRule>,
    pub(crate) dcs: Vec<CDc>,
}

impl<'a> Engine<'a> {
    pub fn new(db: &'a Database, spec: &'a Specification, sims: &'a dyn SimSource) -> Self {
        let compile = |rules: &[crate::spec::Rule]| -> Vec<CRule> {
            rules.iter().map(|r| CRule::compile(r, &spec.schema, db)).collect()
        };
        let dcs = spec
            .dcs
            .iter()
            .map(|d| CDc {
                body: CompiledBody::compile(&d.body, &spec.schema, db),
                monotone: is_merge_monotone(d, spec),
            })
            .collect();
        Self {
            db,
            spec,
            sims,
            opts: EngineOptions::default(),
            hard: compile(&spec.hard),
            soft: compile(&spec.soft),
            dcs,
        }
    }

    pub fn with_options(mut self, opts: EngineOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn options(&self) -> EngineOptions {
        self.opts
    }

    pub fn database(&self) -> &'a Database {
        self.db
    }

    pub fn spec(&self) -> &'a Specification {
        self.spec
    }

    pub fn sims(&self) -> &'a dyn SimSource {
        self.sims
    }

    fn fixpoint(&self, rules: &[CRule]) -> Result<EqRel, EngineError> {
        Ok(saturate(
            self.db,
            rules,
            EqRel::identity(self.db),
            None,
            self.sims,
            self.opts.eval,
            self.opts.exec,
            None,
        )?)
    }

    /// Least fixpoint of the hard rules.
    pub fn lb(&self) -> Result<EqRel, EngineError> {
        self.fixpoint(&self.hard)
    }

    /// Least fixpoint of all rules treated as hard.
    pub fn ub(&self) -> Result<EqRel, EngineError> {
        let all: Vec<CRule> = self.hard.iter().chain(&self.soft).cloned().collect();
        self.fixpoint(&all)
    }

    /// Fixpoint of all rules with every similarity atom removed. Needs no
    /// similarity scores.
    pub fn loose_ub(&self) -> Result<EqRel, EngineError> {
        let loose = self.spec.transform(TransformMode::LooseUb);
        let rules: Vec<CRule> = loose
            .hard
            .iter()
            .map(|r| CRule::compile(r, &self.spec.schema, self.db))
            .collect();
        let none = SimStore::new();
        Ok(saturate(
            self.db,
            &rules,
            EqRel::identity(self.db),
            None,
            &none,
            self.opts.eval,
            self.opts.exec,
            None,
        )?)
    }

    pub(crate) fn dcs_hold(&self, e: &EqRel, only_monotone: bool) -> bool {
        let view = View::new(self.db, e);
        self.dcs
            .iter()
            .filter(|d| !only_monotone || d.monotone)
            .all(|d| dc_holds(&d.body, &view, self.opts.eval))
    }

    /// Every hard rule and every constraint is satisfied in `(D, e)`.
    ///
    /// This does not check that `e` is reachable by rule applications; see
    /// [`Engine::replay`] for that.
    pub fn satisfies(&self, e: &EqRel) -> Result<bool, EngineError> {
        let view = View::new(self.db, e);
        for r in &self.hard {
            if !open_answers(r, &view, self.sims, self.opts.eval, None)?.is_empty() {
                return Ok(false);
            }
        }
        Ok(self.dcs_hold(e, false))
    }

    /// Replays the derivation from the identity relation, checking that each
    /// step is an answer of its rule at the point it is applied, and that the
    /// result is `sol.eq`.
    pub fn replay(&self, sol: &Solution) -> Result<bool, EngineError> {
        let matcher = Matcher::new(self.db, &self.spec.schema).with_options(self.opts.eval);
        let mut e = EqRel::identity(self.db);
        for step in &sol.derivation {
            let Some(rule) = self.spec.rule(&step.rule) else {
                return Ok(false);
            };
            let answers = matcher.answers(&rule.body, (&rule.head.0, &rule.head.1), &e, self.sims)?;
            if !answers.contains(&e, step.pair.left(), step.pair.right()) {
                return Ok(false);
            }
            e.union(step.pair.left(), step.pair.right())?;
        }
        Ok(e == sol.eq)
    }

    /// `satisfies` plus `replay`.
    pub fn is_solution(&self, sol: &Solution) -> Result<bool, EngineError> {
        Ok(self.satisfies(&sol.eq)? && self.replay(sol)?)
    }

    pub fn solve_one(&self) -> Result<Option<Solution>, EngineError> {
        Ok(self.enumerate_solutions(1)?.into_iter().next())
    }

    /// Up to `n` solutions with pairwise distinct relations, in search order.
    pub fn enumerate_solutions(&self, n: usize) -> Result<Vec<Solution>, EngineError> {
        let mut out = Vec::new();
        if n == 0 {
            return Ok(out);
        }
        self.search(|sol| {
            out.push(sol);
            if out.len() >= n {
                std::ops::ControlFlow::Break(())
            } else {
                std::ops::ControlFlow::Continue(())
            }
        })?;
        Ok(out)
    }

    pub fn all_solutions(&self) -> Result<Vec<Solution>, EngineError> {
        self.enumerate_solutions(usize::MAX)
    }

    /// Up to `n` subset-maximal solutions, ordered by their sorted pair lists.
    pub fn maximal_solutions(&self, n: usize) -> Result<Vec<Solution>, EngineError> {
        let all = self.all_solutions()?;
        let mut max = maximal_only(all);
        max.truncate(n);
        Ok(max)
    }

    /// Pairs that occur in some solution.
    pub fn possible_merges(&self) -> Result<BTreeSet<MergePair>, EngineError> {
        let mut pm = BTreeSet::new();
        self.search(|sol| {
            pm.extend(sol.eq.pairs());
            std::ops::ControlFlow::Continue(())
        })?;
        Ok(pm)
    }

    /// Whether some solution contains `(a, b)`.
    pub fn is_possible(&self, a: ConstId, b: ConstId) -> Result<bool, EngineError> {
        if a != b && !(self.db.is_entity(a) && self.db.is_entity(b)) {
            return Ok(false);
        }
        if a != b && !self.ub()?.same(a, b) {
            return Ok(false);
        }
        let mut found = false;
        self.search(|sol| {
            if sol.eq.same(a, b) {
                found = true;
                std::ops::ControlFlow::Break(())
            } else {
                std::ops::ControlFlow::Continue(())
            }
        })?;
        Ok(found)
    }

    /// Pairs that occur in every maximal solution; empty without solutions.
    pub fn certain_merges(&self) -> Result<BTreeSet<MergePair>, EngineError> {
        Ok(certain_of(&self.maximal_solutions(usize::MAX)?))
    }

    /// All four merge sets from one enumeration.
    pub fn merge_sets(&self) -> Result<MergeSets, EngineError> {
        let lb = self.lb()?.pairs();
        let ub = self.ub()?.pairs();
        let all = self.all_solutions()?;
        let consistent = !all.is_empty();
        let pm = all.iter().flat_map(|s| s.eq.pairs()).collect();
        let cm = certain_of(&maximal_only(all));
        Ok(MergeSets {
            lb,
            ub,
            pm,
            cm,
            consistent,
        })
    }

    /// Levels of the pairs of `sol`, which must satisfy every hard rule and
    /// constraint.
    pub fn levels(&self, sol: &EqRel) -> Result<LevelMap, EngineError> {
        self.levels_in(sol, self.opts.levels_scope)
    }

    pub(crate) fn levels_in(&self, sol: &EqRel, scope: LevelsScope) -> Result<LevelMap, EngineError> {
        if !self.satisfies(sol)? {
            return Err(EngineError::NotASolution);
        }
        levels::compute(self, sol, scope)
    }
}

fn certain_of(max: &[Solution]) -> BTreeSet<MergePair> {
    let mut it = max.iter();
    let Some(first) = it.next() else {
        return BTreeSet::new();
    };
    let mut cm = first.eq.pairs();
    for s in it {
        cm.retain(|p| s.eq.contains(*p));
    }
    cm
}

/// Keeps the solutions not strictly contained in another one.
pub fn maximal_only(all: Vec<Solution>) -> Vec<Solution> {
    let mut max: Vec<Solution> = Vec::new();
    for (i, s) in all.iter().enumerate() {
        let dominated = all
            .iter()
            .enumerate()
            .any(|(j, t)| i != j && s.eq.is_subset_of(&t.eq) && s.eq != t.eq);
        if !dominated {
            max.push(s.clone());
        }
    }
    max.sort_by_cached_key(|s| s.eq.pairs().into_iter().collect::<Vec<_>>());
    max
}
