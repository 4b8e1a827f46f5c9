use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::{ConstId, Database, ModelError};

/// A pair of merged entity references, stored smaller id first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MergePair {
    left: ConstId,
    right: ConstId,
}

impl MergePair {
    pub fn new(a: ConstId, b: ConstId) -> Self {
        if a <= b {
            Self { left: a, right: b }
        } else {
            Self { left: b, right: a }
        }
    }

    pub fn left(self) -> ConstId {
        self.left
    }

    pub fn right(self) -> ConstId {
        self.right
    }

    pub fn is_reflexive(self) -> bool {
        self.left == self.right
    }

    pub fn texts(self, db: &Database) -> (String, String) {
        (db.text(self.left).to_string(), db.text(self.right).to_string())
    }

    pub fn display(self, db: &Database) -> String {
        format!("({}, {})", db.text(self.left), db.text(self.right))
    }
}

/// Equivalence relation over the constants of one database, as a union-find
/// forest whose roots are always the smallest id of their class.
#[derive(Clone)]
pub struct EqRel {
    parent: Vec<u32>,
    mergeable: Arc<[bool]>,
}

impl EqRel {
    /// The identity relation over Dom(db).
    pub fn identity(db: &Database) -> Self {
        let mergeable: Arc<[bool]> = db.domain().iter().map(|c| c.is_entity()).collect();
        Self {
            parent: (0..db.domain().len() as u32).collect(),
            mergeable,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Least member of the class of `c`.
    #[inline]
    pub fn rep(&self, c: ConstId) -> ConstId {
        let mut x = c.0;
        loop {
            let p = self.parent[x as usize];
            if p == x {
                return ConstId(x);
            }
            x = p;
        }
    }

    pub fn try_rep(&self, c: ConstId) -> Result<ConstId, ModelError> {
        if c.index() >= self.parent.len() {
            return Err(ModelError::UnknownConstant(format!("#{}", c.0)));
        }
        Ok(self.rep(c))
    }

    #[inline]
    pub fn same(&self, a: ConstId, b: ConstId) -> bool {
        a == b || self.rep(a) == self.rep(b)
    }

    pub fn contains(&self, pair: MergePair) -> bool {
        self.same(pair.left(), pair.right())
    }

    pub fn is_mergeable(&self, c: ConstId) -> bool {
        self.mergeable[c.index()]
    }

    /// Merges the classes of `a` and `b`. Returns whether anything changed.
    pub fn union(&mut self, a: ConstId, b: ConstId) -> Result<bool, ModelError> {
        for c in [a, b] {
            if c.index() >= self.parent.len() {
                return Err(ModelError::UnknownConstant(format!("#{}", c.0)));
            }
        }
        if a == b {
            return Ok(false);
        }
        for c in [a, b] {
            if !self.mergeable[c.index()] {
                return Err(ModelError::NonEntityMerge(format!("#{}", c.0)));
            }
        }
        let ra = self.rep(a);
        let rb = self.rep(b);
        if ra == rb {
            return Ok(false);
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi.index()] = lo.0;
        self.parent[a.index()] = lo.0;
        self.parent[b.index()] = lo.0;
        Ok(true)
    }

    /// Representative of every constant, by id. Two relations over the same
    /// database are equal iff their signatures are equal.
    pub fn signature(&self) -> Vec<u32> {
        (0..self.parent.len() as u32).map(|i| self.rep(ConstId(i)).0).collect()
    }

    /// Flattens every path so that `rep` is a single lookup.
    pub fn compress(&mut self) {
        for i in 0..self.parent.len() {
            let r = self.rep(ConstId(i as u32));
            self.parent[i] = r.0;
        }
    }

    /// Non-singleton classes, each sorted, ordered by representative.
    pub fn classes(&self) -> Vec<Vec<ConstId>> {
        let mut by_rep: Vec<Vec<ConstId>> = vec![Vec::new(); self.parent.len()];
        for i in 0..self.parent.len() as u32 {
            by_rep[self.rep(ConstId(i)).index()].push(ConstId(i));
        }
        by_rep.into_iter().filter(|c| c.len() > 1).collect()
    }

    pub fn class_of(&self, c: ConstId) -> Vec<ConstId> {
        let r = self.rep(c);
        (0..self.parent.len() as u32)
            .map(ConstId)
            .filter(|&x| self.rep(x) == r)
            .collect()
    }

    /// All non-reflexive pairs of the relation, canonical and sorted.
    pub fn pairs(&self) -> BTreeSet<MergePair> {
        let mut out = BTreeSet::new();
        for class in self.classes() {
            for (i, &a) in class.iter().enumerate() {
                for &b in &class[i + 1..] {
                    out.insert(MergePair::new(a, b));
                }
            }
        }
        out
    }

    pub fn non_trivial_count(&self) -> usize {
        self.classes().iter().map(|c| c.len() * (c.len() - 1) / 2).sum()
    }

    pub fn is_identity(&self) -> bool {
        (0..self.parent.len()).all(|i| self.parent[i] as usize == i)
    }

    /// Whether every pair of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &EqRel) -> bool {
        (0..self.parent.len() as u32).all(|i| {
            let c = ConstId(i);
            other.same(c, self.rep(c))
        })
    }
}

impl PartialEq for EqRel {
    fn eq(&self, other: &Self) -> bool {
        self.parent.len() == other.parent.len() && self.is_subset_of(other) && other.is_subset_of(self)
    }
}

impl Eq for EqRel {}

impl fmt::Debug for EqRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.classes()).finish()
    }
}

/// Least equivalence relation over Dom(db) containing `pairs`.
pub fn eqrel_close<I>(pairs: I, db: &Database) -> Result<EqRel, ModelError>
where
    I: IntoIterator<Item = (ConstId, ConstId)>,
{
    let mut e = EqRel::identity(db);
    for (a, b) in pairs {
        if a.index() >= e.len() || b.index() >= e.len() {
            return Err(ModelError::UnknownConstant(format!("#{}", a.0.max(b.0))));
        }
        if !db.is_entity(a) {
            return Err(ModelError::NonEntityMerge(db.constant(a).to_string()));
        }
        if !db.is_entity(b) {
            return Err(ModelError::NonEntityMerge(db.constant(b).to_string()));
        }
        e.union(a, b)?;
    }
    Ok(e)
}

/// D_E: every constant replaced by its representative, duplicates collapsed.
/// The result is a fresh database with its own constant table.
pub fn induce(db: &Database, e: &EqRel) -> Database {
    let mut b = Database::builder();
    for rel in db.relations() {
        b.relation(&rel.name, rel.arity).expect("relations are unique");
    }
    for fact in db.facts() {
        let args = fact
            .args
            .iter()
            .map(|a| db.constant(e.rep(*a)).clone())
            .collect();
        b.fact(&db.relation(fact.relation).name, args)
            .expect("arity preserved");
    }
    b.build()
}
