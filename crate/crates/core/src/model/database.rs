use std::collections::{BTreeSet, HashMap};

use super::{ConstId, Constant, ModelError};

pub type RelId = usize;
pub type FactId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub relation: RelId,
    pub args: Vec<ConstId>,
}

/// Immutable, duplicate-free fact store. The constant table is exactly the
/// active domain, sorted by text so that id order is lexicographic order.
#[derive(Clone, Debug)]
pub struct Database {
    relations: Vec<Relation>,
    rel_index: HashMap<String, RelId>,
    constants: Vec<Constant>,
    lookup: HashMap<Constant, ConstId>,
    facts: Vec<Fact>,
    by_relation: Vec<Vec<FactId>>,
    by_constant: Vec<Vec<FactId>>,
}

#[derive(Clone, Debug, Default)]
pub struct DatabaseBuilder {
    relations: Vec<Relation>,
    rel_index: HashMap<String, RelId>,
    facts: BTreeSet<(RelId, Vec<Constant>)>,
}

impl DatabaseBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn relation(&mut self, name: &str, arity: usize) -> Result<RelId, ModelError> {
        if self.rel_index.contains_key(name) {
            return Err(ModelError::DuplicateRelation(name.to_string()));
        }
        let id = self.relations.len();
        self.relations.push(Relation {
            name: name.to_string(),
            arity,
        });
        self.rel_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn fact(&mut self, relation: &str, args: Vec<Constant>) -> Result<&mut Self, ModelError> {
        let rel = *self
            .rel_index
            .get(relation)
            .ok_or_else(|| ModelError::UnknownRelation(relation.to_string()))?;
        let expected = self.relations[rel].arity;
        if args.len() != expected {
            return Err(ModelError::ArityMismatch {
                relation: relation.to_string(),
                expected,
                found: args.len(),
            });
        }
        self.facts.insert((rel, args));
        Ok(self)
    }

    pub fn build(self) -> Database {
        let domain: BTreeSet<&Constant> = self.facts.iter().flat_map(|(_, a)| a.iter()).collect();
        let mut constants: Vec<Constant> = domain.into_iter().cloned().collect();
        constants.sort_by(|a, b| a.text().cmp(b.text()).then(a.kind().cmp(&b.kind())));
        let lookup: HashMap<Constant, ConstId> = constants
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), ConstId(i as u32)))
            .collect();

        let mut facts: Vec<Fact> = self
            .facts
            .iter()
            .map(|(rel, args)| Fact {
                relation: *rel,
                args: args.iter().map(|c| lookup[c]).collect(),
            })
            .collect();
        facts.sort();
        facts.dedup();

        let mut by_relation = vec![Vec::new(); self.relations.len()];
        let mut by_constant = vec![Vec::new(); constants.len()];
        for (id, fact) in facts.iter().enumerate() {
            by_relation[fact.relation].push(id);
            for arg in &fact.args {
                let list: &mut Vec<FactId> = &mut by_constant[arg.index()];
                if list.last() != Some(&id) {
                    list.push(id);
                }
            }
        }

        Database {
            relations: self.relations,
            rel_index: self.rel_index,
            constants,
            lookup,
            facts,
            by_relation,
            by_constant,
        }
    }
}

impl Database {
    pub fn builder() -> DatabaseBuilder {
        DatabaseBuilder::new()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.rel_index.get(name).copied()
    }

    pub fn relation(&self, id: RelId) -> &Relation {
        &self.relations[id]
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact(&self, id: FactId) -> &Fact {
        &self.facts[id]
    }

    pub fn facts_of(&self, rel: RelId) -> &[FactId] {
        &self.by_relation[rel]
    }

    /// Facts mentioning `c` in any position.
    pub fn facts_with(&self, c: ConstId) -> &[FactId] {
        &self.by_constant[c.index()]
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Dom(D), in id order.
    pub fn domain(&self) -> &[Constant] {
        &self.constants
    }

    pub fn constant(&self, id: ConstId) -> &Constant {
        &self.constants[id.index()]
    }

    pub fn text(&self, id: ConstId) -> &str {
        self.constants[id.index()].text()
    }

    pub fn id_of(&self, c: &Constant) -> Option<ConstId> {
        self.lookup.get(c).copied()
    }

    pub fn entity(&self, text: &str) -> Option<ConstId> {
        self.id_of(&Constant::entity(text))
    }

    pub fn is_null(&self, id: ConstId) -> bool {
        self.constants[id.index()].is_null()
    }

    pub fn is_entity(&self, id: ConstId) -> bool {
        self.constants[id.index()].is_entity()
    }

    pub fn entity_count(&self) -> usize {
        self.constants.iter().filter(|c| c.is_entity()).count()
    }

    pub fn const_ids(&self) -> impl Iterator<Item = ConstId> + '_ {
        (0..self.constants.len() as u32).map(ConstId)
    }

    /// `Rel(a, b, ...)` with constant texts; nulls print as `nan`.
    pub fn render_fact(&self, id: FactId) -> String {
        let fact = &self.facts[id];
        let args: Vec<String> = fact
            .args
            .iter()
            .map(|a| self.constant(*a).to_string())
            .collect();
        format!("{}({})", self.relations[fact.relation].name, args.join(", "))
    }

    /// Facts as `(relation name, constants)` in id order.
    pub fn to_rows(&self) -> Vec<(String, Vec<Constant>)> {
        self.facts
            .iter()
            .map(|f| {
                (
                    self.relations[f.relation].name.clone(),
                    f.args.iter().map(|a| self.constant(*a).clone()).collect(),
                )
            })
            .collect()
    }
}
