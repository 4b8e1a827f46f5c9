use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::sim::{Score, SimFunc};

/// Datatype hint of an attribute. `Id` columns hold entity references; all
/// others hold plain values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttrType {
    Id,
    Short,
    Long,
    Num,
    Val,
}

impl AttrType {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "id" => Self::Id,
            "short" | "short-text" => Self::Short,
            "long" | "long-text" => Self::Long,
            "num" | "numeric" => Self::Num,
            "val" => Self::Val,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Id => "id",
            Self::Short => "short",
            Self::Long => "long",
            Self::Num => "num",
            Self::Val => "val",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub ty: AttrType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub attrs: Vec<Attribute>,
    /// Indexes into `attrs` of the declared merge positions.
    pub merge: Vec<usize>,
}

impl RelationDecl {
    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_id(&self, pos: usize) -> bool {
        self.attrs[pos].ty == AttrType::Id
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    pub relations: Vec<RelationDecl>,
}

impl Schema {
    pub fn get(&self, name: &str) -> Option<&RelationDecl> {
        self.relations.iter().find(|r| r.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelAtom {
    pub relation: String,
    pub terms: Vec<Term>,
}

/// `sim:f(left, right) >= threshold`, over variables bound by relational atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimAtom {
    pub func: SimFunc,
    pub left: String,
    pub right: String,
    pub threshold: Score,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub left: Term,
    pub right: Term,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RuleBody {
    pub atoms: Vec<RelAtom>,
    pub sims: Vec<SimAtom>,
    pub neqs: Vec<Inequality>,
}

impl RuleBody {
    /// Every `(relation, position)` at which `var` occurs.
    pub fn positions_of(&self, var: &str) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        for atom in &self.atoms {
            for (i, t) in atom.terms.iter().enumerate() {
                if t.var() == Some(var) {
                    out.push((atom.relation.clone(), i));
                }
            }
        }
        out
    }

    pub fn relational_vars(&self) -> BTreeSet<&str> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms.iter().filter_map(Term::var))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Hard,
    Soft,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub kind: RuleKind,
    pub label: String,
    pub description: Option<String>,
    pub body: RuleBody,
    pub head: (String, String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DenialConstraint {
    pub label: String,
    pub description: Option<String>,
    pub body: RuleBody,
}

/// Candidate-pair collector: the body of a rule without its similarity
/// atoms, with the pair compared by one of its similarity atoms as head.
/// Evaluated with joins taken modulo the upper-bound relation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GetSimRule {
    pub label: String,
    pub source: String,
    pub func: SimFunc,
    pub left: String,
    pub right: String,
    pub body: RuleBody,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Specification {
    pub schema: Schema,
    pub hard: Vec<Rule>,
    pub soft: Vec<Rule>,
    pub dcs: Vec<DenialConstraint>,
    pub getsim: Vec<GetSimRule>,
    pub sim_default: SimFunc,
}

impl Specification {
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.hard.iter().chain(self.soft.iter())
    }

    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.rules().find(|r| r.label == label)
    }

    pub fn sim_atoms(&self) -> impl Iterator<Item = (&RuleBody, &SimAtom)> {
        self.rules()
            .flat_map(|r| r.body.sims.iter().map(move |s| (&r.body, s)))
    }

    pub fn has_sim_atoms(&self) -> bool {
        self.sim_atoms().next().is_some()
    }

    /// Distinct similarity functions referenced by rule bodies.
    pub fn sim_funcs(&self) -> BTreeSet<SimFunc> {
        self.sim_atoms().map(|(_, s)| s.func).collect()
    }

    /// Columns compared by similarity atoms, keyed by relation name.
    pub fn sim_positions(&self) -> BTreeMap<String, BTreeSet<usize>> {
        let mut out: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (body, s) in self.sim_atoms() {
            for v in [&s.left, &s.right] {
                for (rel, pos) in body.positions_of(v) {
                    out.entry(rel).or_default().insert(pos);
                }
            }
        }
        out
    }

    /// Columns that carry the head variables of some rule.
    pub fn merge_positions(&self) -> BTreeMap<String, BTreeSet<usize>> {
        let mut out: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for r in self.rules() {
            for v in [&r.head.0, &r.head.1] {
                for (rel, pos) in r.body.positions_of(v) {
                    out.entry(rel).or_default().insert(pos);
                }
            }
        }
        out
    }

    /// Rewrites every similarity atom to use `func`.
    pub fn with_sim_func(&self, func: SimFunc) -> Specification {
        let mut out = self.clone();
        for r in out.hard.iter_mut().chain(out.soft.iter_mut()) {
            for s in &mut r.body.sims {
                s.func = func;
            }
        }
        for g in &mut out.getsim {
            g.func = func;
        }
        out.sim_default = func;
        out
    }
}
