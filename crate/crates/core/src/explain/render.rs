use std::fmt::Write;

use serde::Serialize;

use super::{ProofNode, ProofTree};
use crate::model::{ConstId, Database};
use crate::spec::Specification;

fn pair_label(db: &Database, (a, b): (ConstId, ConstId)) -> String {
    format!("({}, {})", db.text(a), db.text(b))
}

fn sim_label(db: &Database, left: ConstId, right: ConstId) -> String {
    format!("{} ≈ {}", db.text(left), db.text(right))
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph with one vertex per tree node. Merges are ellipses
/// (annotated with the rule label for rule nodes), facts are boxes and
/// similarity facts rounded boxes.
pub fn to_dot(tree: &ProofTree, db: &Database) -> String {
    fn walk(node: &ProofNode, db: &Database, next: &mut usize, out: &mut String) -> usize {
        let id = *next;
        *next += 1;
        let (attrs, label) = match node {
            ProofNode::Rule { pair, rule, .. } => {
                ("shape=ellipse", format!("{}\\n[{}]", escape(&pair_label(db, *pair)), escape(rule)))
            }
            ProofNode::Transitive { pair, .. } => {
                ("shape=ellipse", format!("{}\\n[transitive]", escape(&pair_label(db, *pair))))
            }
            ProofNode::Fact(f) => ("shape=box", escape(&db.render_fact(*f))),
            ProofNode::Sim {
                left, right, score, ..
            } => (
                "shape=box, style=rounded",
                format!("{} ({score})", escape(&sim_label(db, *left, *right))),
            ),
        };
        writeln!(out, "  n{id} [{attrs}, label=\"{label}\"];").unwrap();
        for child in node.children() {
            let c = walk(child, db, next, out);
            writeln!(out, "  n{id} -> n{c};").unwrap();
        }
        id
    }
    let mut out = String::from("digraph proof {\n  node [fontname=\"Helvetica\"];\n");
    walk(&tree.root, db, &mut 0, &mut out);
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct JsonNode {
    kind: &'static str,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    func: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<String>,
    children: Vec<JsonNode>,
}

fn json_node(node: &ProofNode, db: &Database, spec: &Specification) -> JsonNode {
    let children = node.children().iter().map(|c| json_node(c, db, spec)).collect();
    match node {
        ProofNode::Rule { pair, rule, .. } => JsonNode {
            kind: "rule",
            label: pair_label(db, *pair),
            rule: Some(rule.clone()),
            description: spec.rule(rule).and_then(|r| r.description.clone()),
            func: None,
            score: None,
            children,
        },
        ProofNode::Transitive { pair, .. } => JsonNode {
            kind: "transitive",
            label: pair_label(db, *pair),
            rule: None,
            description: None,
            func: None,
            score: None,
            children,
        },
        ProofNode::Fact(f) => JsonNode {
            kind: "fact",
            label: db.render_fact(*f),
            rule: None,
            description: None,
            func: None,
            score: None,
            children,
        },
        ProofNode::Sim {
            func,
            left,
            right,
            score,
        } => JsonNode {
            kind: "sim",
            label: sim_label(db, *left, *right),
            rule: None,
            description: None,
            func: Some(func.to_string()),
            score: Some(score.to_string()),
            children,
        },
    }
}

pub fn to_json(tree: &ProofTree, db: &Database, spec: &Specification) -> serde_json::Value {
    serde_json::to_value(json_node(&tree.root, db, spec)).expect("tree serializes")
}

/// Indented plain-text account of the tree, one line per merge.
pub fn summary(tree: &ProofTree, db: &Database, spec: &Specification) -> String {
    fn walk(node: &ProofNode, db: &Database, spec: &Specification, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match node {
            ProofNode::Rule { pair, rule, children } => {
                let why = spec
                    .rule(rule)
                    .and_then(|r| r.description.clone())
                    .map(|d| format!(": {d}"))
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{pad}{} and {} are merged by rule {rule}{why}",
                    db.text(pair.0),
                    db.text(pair.1)
                )
                .unwrap();
                let sims: Vec<String> = children
                    .iter()
                    .filter_map(|c| match c {
                        ProofNode::Sim {
                            left, right, score, ..
                        } => Some(format!("{} ({score})", sim_label(db, *left, *right))),
                        _ => None,
                    })
                    .collect();
                if !sims.is_empty() {
                    writeln!(out, "{pad}  similar: {}", sims.join(", ")).unwrap();
                }
                for c in children.iter().filter(|c| c.is_merge()) {
                    walk(c, db, spec, depth + 1, out);
                }
            }
            ProofNode::Transitive { pair, children } => {
                let via = children[0].pair().map(|p| p.1).unwrap_or(pair.0);
                writeln!(
                    out,
                    "{pad}{} and {} are merged through {}",
                    db.text(pair.0),
                    db.text(pair.1),
                    db.text(via)
                )
                .unwrap();
                for c in children {
                    walk(c, db, spec, depth + 1, out);
                }
            }
            ProofNode::Fact(_) | ProofNode::Sim { .. } => {}
        }
    }
    let mut out = String::new();
    walk(&tree.root, db, spec, 0, &mut out);
    out
}
