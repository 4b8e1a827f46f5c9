//! Recursion levels of the merges in a solution.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use super::{Engine, EngineError};
use crate::matcher::{for_each_match, View};
use crate::model::{EqRel, MergePair};

/// Which rule answers may enter the level chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LevelsScope {
    /// Only answers that belong to the solution.
    #[default]
    Solution,
    /// Every answer, so the chain climbs to the upper bound.
    Ub,
}

impl LevelsScope {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "solution" => Some(Self::Solution),
            "ub" => Some(Self::Ub),
            _ => None,
        }
    }
}

/// Level of every non-trivial pair of a solution, with the chain
/// `S_0 ⊆ S_1 ⊆ ...` that produced them.
#[derive(Clone, Debug)]
pub struct LevelMap {
    levels: BTreeMap<MergePair, usize>,
    chain: Vec<EqRel>,
}

impl LevelMap {
    /// 0 for reflexive pairs, `None` for pairs outside the solution.
    pub fn get(&self, pair: MergePair) -> Option<usize> {
        if pair.is_reflexive() {
            return Some(0);
        }
        self.levels.get(&pair).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MergePair, usize)> + '_ {
        self.levels.iter().map(|(p, l)| (*p, *l))
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn max_level(&self) -> usize {
        self.levels.values().copied().max().unwrap_or(0)
    }

    /// `S_0` (identity) through the first `S_i` equal to its successor.
    pub fn chain(&self) -> &[EqRel] {
        &self.chain
    }
}

pub(super) fn compute(
    engine: &Engine<'_>,
    sol: &EqRel,
    scope: LevelsScope,
) -> Result<LevelMap, EngineError> {
    let db = engine.db;
    let rules: Vec<_> = engine.hard.iter().chain(&engine.soft).collect();
    let mut chain = vec![EqRel::identity(db)];
    let mut levels = BTreeMap::new();
    loop {
        let prev = chain.last().expect("chain starts with identity");
        let mut next = prev.clone();
        {
            let view = View::new(db, prev);
            for rule in &rules {
                let (x, y) = rule.head;
                let mut err = None;
                for_each_match(
                    &rule.body,
                    Some(rule.head),
                    &view,
                    engine.sims,
                    engine.opts.eval,
                    None,
                    &mut |w| {
                        let (a, b) = (w.binding[x], w.binding[y]);
                        if scope == LevelsScope::Ub || sol.same(a, b) {
                            if let Err(e) = next.union(a, b) {
                                err = Some(e);
                                return ControlFlow::Break(());
                            }
                        }
                        ControlFlow::Continue(())
                    },
                )?;
                if let Some(e) = err {
                    return Err(e.into());
                }
            }
        }
        next.compress();
        if next == *prev {
            break;
        }
        let level = chain.len();
        for p in next.pairs() {
            if sol.contains(p) {
                levels.entry(p).or_insert(level);
            }
        }
        chain.push(next);
    }
    Ok(LevelMap { levels, chain })
}
