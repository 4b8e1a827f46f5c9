//! Recursive-descent parser for the rule language.
//!
//! ```text
//! relation Band(bid:id, name:short, genre:short, year:val, founder:val) merge [bid];
//! sim default = table;
//! hard rho "same band": Band(x,n,g,d,f), Band(y,n2,g2,d,f),
//!     sim(n,n2) >= 95, sim(g,g2) >= 95 => eq(x,y);
//! soft sigma: Song(x,t,l,b), Song(y,t2,l,b), sim(t,t2) >= 95 ~> eq(x,y);
//! deny delta: Appear(s,a,i), Appear(s,a,j), i != j;
//! ```

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::ast::*;
use crate::sim::{Score, SimFunc};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown relation `{name}`")]
    UnknownRelation { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{relation}` takes {expected} arguments, found {found}")]
    ArityMismatch {
        line: usize,
        col: usize,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("{line}:{col}: head variable `{var}` of `{label}` does not occur in a relational atom")]
    UnsafeHeadVariable {
        line: usize,
        col: usize,
        label: String,
        var: String,
    },
    #[error("{line}:{col}: {msg}")]
    Invalid { line: usize, col: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 13] = [
    "!=", ">=", "=>", "~>", "(", ")", ",", ";", ":", "[", "]", "=", "_",
];

fn lex(src: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => {
                        return Err(SpecError::Syntax {
                            line: tl,
                            col: tc,
                            msg: "unterminated string".into(),
                        })
                    }
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, '"');
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        let n = chars[i + 1];
                        advance(&mut i, &mut line, &mut col, '\\');
                        advance(&mut i, &mut line, &mut col, n);
                        s.push(match n {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    }
                    Some(&ch) => {
                        advance(&mut i, &mut line, &mut col, ch);
                        s.push(ch);
                    }
                }
            }
            out.push(Token {
                tok: Tok::Str(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut s = String::new();
            s.push(c);
            advance(&mut i, &mut line, &mut col, c);
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                s.push(chars[i]);
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            out.push(Token {
                tok: Tok::Num(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_alphabetic() || (c == '_' && chars.get(i + 1).is_some_and(|d| d.is_alphanumeric() || *d == '_')) {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                s.push(chars[i]);
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let p = PUNCTS
            .iter()
            .find(|p| rest.starts_with(**p))
            .ok_or_else(|| SpecError::Syntax {
                line: tl,
                col: tc,
                msg: format!("unexpected character `{c}`"),
            })?;
        for ch in p.chars() {
            advance(&mut i, &mut line, &mut col, ch);
        }
        out.push(Token {
            tok: Tok::Punct(p),
            line: tl,
            col: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    fresh: usize,
}

/// Parsed but not yet checked rule body; similarity functions still open.
struct RawBody {
    atoms: Vec<(RelAtom, usize, usize)>,
    sims: Vec<(Option<SimFunc>, String, String, Score, usize, usize)>,
    neqs: Vec<(Inequality, usize, usize)>,
}

enum Stmt {
    Relation(RelationDecl, usize, usize),
    SimDefault(SimFunc),
    Rule {
        kind: RuleKind,
        label: String,
        description: Option<String>,
        body: RawBody,
        head: (String, String),
        line: usize,
        col: usize,
    },
    Deny {
        label: String,
        description: Option<String>,
        body: RawBody,
        line: usize,
        col: usize,
    },
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SpecError> {
        let t = self.peek();
        Err(SpecError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn expect(&mut self, p: &str) -> Result<(), SpecError> {
        if self.is_punct(p) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{p}`, found {}", describe(&self.peek().tok)))
        }
    }

    fn ident(&mut self) -> Result<String, SpecError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SpecError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => {
                let d = describe(other);
                self.err(format!("expected `{kw}`, found {d}"))
            }
        }
    }

    fn optional_string(&mut self) -> Option<String> {
        if let Tok::Str(s) = &self.peek().tok {
            let s = s.clone();
            self.next();
            Some(s)
        } else {
            None
        }
    }

    fn statement(&mut self) -> Result<Stmt, SpecError> {
        let start = self.peek().clone();
        let kw = self.ident()?;
        match kw.as_str() {
            "relation" => self.relation(start.line, start.col),
            "sim" => {
                self.keyword("default")?;
                self.expect("=")?;
                let f = self.sim_func()?;
                self.expect(";")?;
                Ok(Stmt::SimDefault(f))
            }
            "hard" | "soft" => {
                let kind = if kw == "hard" {
                    RuleKind::Hard
                } else {
                    RuleKind::Soft
                };
                let label = self.ident()?;
                let description = self.optional_string();
                self.expect(":")?;
                let body = self.body()?;
                let arrow = if kind == RuleKind::Hard { "=>" } else { "~>" };
                if !self.is_punct(arrow) {
                    return self.err(format!(
                        "{kw} rule `{label}` must use `{arrow}` before its head"
                    ));
                }
                self.next();
                self.keyword("eq")?;
                self.expect("(")?;
                let x = self.ident()?;
                self.expect(",")?;
                let y = self.ident()?;
                self.expect(")")?;
                self.expect(";")?;
                Ok(Stmt::Rule {
                    kind,
                    label,
                    description,
                    body,
                    head: (x, y),
                    line: start.line,
                    col: start.col,
                })
            }
            "deny" => {
                let label = self.ident()?;
                let description = self.optional_string();
                self.expect(":")?;
                let body = self.body()?;
                self.expect(";")?;
                Ok(Stmt::Deny {
                    label,
                    description,
                    body,
                    line: start.line,
                    col: start.col,
                })
            }
            other => Err(SpecError::Syntax {
                line: start.line,
                col: start.col,
                msg: format!("unknown statement `{other}`"),
            }),
        }
    }

    fn relation(&mut self, line: usize, col: usize) -> Result<Stmt, SpecError> {
        let name = self.ident()?;
        self.expect("(")?;
        let mut attrs = Vec::new();
        loop {
            let an = self.ident()?;
            self.expect(":")?;
            let tt = self.peek().clone();
            let ty_name = self.ident()?;
            let ty = AttrType::parse(&ty_name).ok_or_else(|| SpecError::Syntax {
                line: tt.line,
                col: tt.col,
                msg: format!("unknown attribute type `{ty_name}`"),
            })?;
            attrs.push(Attribute { name: an, ty });
            if self.is_punct(",") {
                self.next();
            } else {
                break;
            }
        }
        self.expect(")")?;
        let mut merge = Vec::new();
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "merge") {
            self.next();
            self.expect("[")?;
            loop {
                let mt = self.peek().clone();
                let an = self.ident()?;
                let idx = attrs
                    .iter()
                    .position(|a| a.name == an)
                    .ok_or_else(|| SpecError::Invalid {
                        line: mt.line,
                        col: mt.col,
                        msg: format!("merge attribute `{an}` is not declared in `{name}`"),
                    })?;
                if attrs[idx].ty != AttrType::Id {
                    return Err(SpecError::Invalid {
                        line: mt.line,
                        col: mt.col,
                        msg: format!("merge attribute `{an}` of `{name}` must have type id"),
                    });
                }
                if !merge.contains(&idx) {
                    merge.push(idx);
                }
                if self.is_punct(",") {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect("]")?;
        }
        self.expect(";")?;
        Ok(Stmt::Relation(RelationDecl { name, attrs, merge }, line, col))
    }

    fn sim_func(&mut self) -> Result<SimFunc, SpecError> {
        let t = self.peek().clone();
        let name = self.ident()?;
        SimFunc::parse(&name).ok_or(SpecError::Syntax {
            line: t.line,
            col: t.col,
            msg: format!("unknown similarity function `{name}`"),
        })
    }

    fn term(&mut self) -> Result<Term, SpecError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(Term::Var(s))
            }
            Tok::Punct("_") => {
                self.next();
                self.fresh += 1;
                Ok(Term::Var(format!("_{}", self.fresh)))
            }
            Tok::Str(s) | Tok::Num(s) => {
                self.next();
                Ok(Term::Const(s))
            }
            other => self.err(format!("expected term, found {}", describe(&other))),
        }
    }

    fn body(&mut self) -> Result<RawBody, SpecError> {
        let mut body = RawBody {
            atoms: Vec::new(),
            sims: Vec::new(),
            neqs: Vec::new(),
        };
        loop {
            let start = self.peek().clone();
            let next_is = |p: &Parser, off: usize, s: &str| {
                matches!(&p.toks.get(p.pos + off).map(|t| &t.tok), Some(Tok::Punct(q)) if *q == s)
            };
            match &start.tok {
                Tok::Ident(s) if s == "sim" && (next_is(self, 1, "(") || next_is(self, 1, ":")) => {
                    self.next();
                    let func = if self.is_punct(":") {
                        self.next();
                        Some(self.sim_func()?)
                    } else {
                        None
                    };
                    self.expect("(")?;
                    let l = self.sim_var()?;
                    self.expect(",")?;
                    let r = self.sim_var()?;
                    self.expect(")")?;
                    self.expect(">=")?;
                    let nt = self.peek().clone();
                    let threshold = match nt.tok {
                        Tok::Num(n) => {
                            self.next();
                            Score::parse_percent(&n).ok_or(SpecError::Syntax {
                                line: nt.line,
                                col: nt.col,
                                msg: format!(
                                    "threshold `{n}` must lie in [0, 100] with at most two decimals"
                                ),
                            })?
                        }
                        other => {
                            return self.err(format!(
                                "expected threshold, found {}",
                                describe(&other)
                            ))
                        }
                    };
                    body.sims.push((func, l, r, threshold, start.line, start.col));
                }
                Tok::Ident(name) if next_is(self, 1, "(") => {
                    let relation = name.clone();
                    self.next();
                    self.next();
                    let mut terms = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            terms.push(self.term()?);
                            if self.is_punct(",") {
                                self.next();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    body.atoms
                        .push((RelAtom { relation, terms }, start.line, start.col));
                }
                _ => {
                    let left = self.term()?;
                    self.expect("!=")?;
                    let right = self.term()?;
                    body.neqs
                        .push((Inequality { left, right }, start.line, start.col));
                }
            }
            if self.is_punct(",") {
                self.next();
            } else {
                break;
            }
        }
        Ok(body)
    }

    fn sim_var(&mut self) -> Result<String, SpecError> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!(
                "similarity atoms compare variables, found {}",
                describe(&other)
            )),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Num(s) => format!("number `{s}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses and checks a specification. Structural errors carry the position
/// of the offending statement or atom.
pub fn parse_spec(src: &str) -> Result<Specification, SpecError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        fresh: 0,
    };
    let mut stmts = Vec::new();
    while p.peek().tok != Tok::Eof {
        stmts.push(p.statement()?);
    }

    let mut schema = Schema::default();
    let mut sim_default = SimFunc::Auto;
    for s in &stmts {
        match s {
            Stmt::Relation(decl, line, col) => {
                if schema.get(&decl.name).is_some() {
                    return Err(SpecError::Invalid {
                        line: *line,
                        col: *col,
                        msg: format!("relation `{}` declared twice", decl.name),
                    });
                }
                let mut seen = HashSet::new();
                for a in &decl.attrs {
                    if !seen.insert(&a.name) {
                        return Err(SpecError::Invalid {
                            line: *line,
                            col: *col,
                            msg: format!("attribute `{}` repeated in `{}`", a.name, decl.name),
                        });
                    }
                }
                schema.relations.push(decl.clone());
            }
            Stmt::SimDefault(f) => sim_default = *f,
            _ => {}
        }
    }

    let mut labels = HashSet::new();
    let mut spec = Specification {
        schema,
        hard: Vec::new(),
        soft: Vec::new(),
        dcs: Vec::new(),
        getsim: Vec::new(),
        sim_default,
    };
    for s in stmts {
        match s {
            Stmt::Rule {
                kind,
                label,
                description,
                body,
                head,
                line,
                col,
            } => {
                if !labels.insert(label.clone()) {
                    return Err(dup_label(&label, line, col));
                }
                if !body.neqs.is_empty() {
                    let (_, l, c) = &body.neqs[0];
                    return Err(SpecError::Invalid {
                        line: *l,
                        col: *c,
                        msg: format!("rule `{label}`: inequality atoms are only allowed in denial constraints"),
                    });
                }
                let body = check_body(&spec.schema, body, sim_default)?;
                for v in [&head.0, &head.1] {
                    let positions = body.positions_of(v);
                    if positions.is_empty() {
                        return Err(SpecError::UnsafeHeadVariable {
                            line,
                            col,
                            label: label.clone(),
                            var: v.clone(),
                        });
                    }
                    let at_merge = positions.iter().any(|(rel, pos)| {
                        spec.schema
                            .get(rel)
                            .is_some_and(|d| d.merge.contains(pos))
                    });
                    if !at_merge {
                        return Err(SpecError::Invalid {
                            line,
                            col,
                            msg: format!(
                                "rule `{label}`: head variable `{v}` does not occur at a merge position"
                            ),
                        });
                    }
                }
                let rule = Rule {
                    kind,
                    label,
                    description,
                    body,
                    head,
                };
                match kind {
                    RuleKind::Hard => spec.hard.push(rule),
                    RuleKind::Soft => spec.soft.push(rule),
                }
            }
            Stmt::Deny {
                label,
                description,
                body,
                line,
                col,
            } => {
                if !labels.insert(label.clone()) {
                    return Err(dup_label(&label, line, col));
                }
                if let Some((_, _, _, _, l, c)) = body.sims.first() {
                    return Err(SpecError::Invalid {
                        line: *l,
                        col: *c,
                        msg: format!("denial constraint `{label}`: similarity atoms are not allowed"),
                    });
                }
                let body = check_body(&spec.schema, body, sim_default)?;
                spec.dcs.push(DenialConstraint {
                    label,
                    description,
                    body,
                });
            }
            _ => {}
        }
    }
    Ok(spec)
}

fn dup_label(label: &str, line: usize, col: usize) -> SpecError {
    SpecError::Invalid {
        line,
        col,
        msg: format!("label `{label}` used twice"),
    }
}

fn check_body(schema: &Schema, raw: RawBody, sim_default: SimFunc) -> Result<RuleBody, SpecError> {
    let mut body = RuleBody::default();
    for (atom, line, col) in raw.atoms {
        let decl = schema
            .get(&atom.relation)
            .ok_or_else(|| SpecError::UnknownRelation {
                line,
                col,
                name: atom.relation.clone(),
            })?;
        if decl.arity() != atom.terms.len() {
            return Err(SpecError::ArityMismatch {
                line,
                col,
                relation: atom.relation.clone(),
                expected: decl.arity(),
                found: atom.terms.len(),
            });
        }
        body.atoms.push(atom);
    }
    if body.atoms.is_empty() {
        return Err(SpecError::Invalid {
            line: 0,
            col: 0,
            msg: "a body needs at least one relational atom".into(),
        });
    }
    let bound: BTreeSet<String> = body.relational_vars().into_iter().map(String::from).collect();
    for (ineq, line, col) in raw.neqs {
        for t in [&ineq.left, &ineq.right] {
            if let Some(v) = t.var() {
                if !bound.contains(v) {
                    return Err(SpecError::Invalid {
                        line,
                        col,
                        msg: format!("variable `{v}` of an inequality does not occur in a relational atom"),
                    });
                }
            }
        }
        body.neqs.push(ineq);
    }
    for (func, left, right, threshold, line, col) in raw.sims {
        for v in [&left, &right] {
            if !bound.contains(v) {
                return Err(SpecError::Invalid {
                    line,
                    col,
                    msg: format!("variable `{v}` of a similarity atom does not occur in a relational atom"),
                });
            }
        }
        let func = match func {
            Some(f) => f,
            None if sim_default != SimFunc::Auto => sim_default,
            None => route_by_hint(schema, &body, &left, &right),
        };
        body.sims.push(SimAtom {
            func,
            left,
            right,
            threshold,
        });
    }
    Ok(body)
}

/// numeric columns compare by edit distance, short text by Jaro-Winkler and
/// long text by TF-IDF cosine; mixed or untyped columns decide per pair.
fn route_by_hint(schema: &Schema, body: &RuleBody, left: &str, right: &str) -> SimFunc {
    let types: BTreeSet<&'static str> = [left, right]
        .iter()
        .flat_map(|v| body.positions_of(v))
        .filter_map(|(rel, pos)| schema.get(&rel).map(|d| d.attrs[pos].ty.as_str()))
        .collect();
    match types.iter().copied().collect::<Vec<_>>().as_slice() {
        ["num"] => SimFunc::Lev,
        ["short"] => SimFunc::Jw,
        ["long"] => SimFunc::TfIdf,
        _ => SimFunc::Auto,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: &str = r#"
        relation Band(bid:id, name:short, genre:short, year:val, founder:val) merge [bid];
        relation Song(sid:id, title:short, lyricist:val, bid:id) merge [sid];
        relation Appear(sid:id, album:short, position:val);
        hard rho: Band(x,n,g,d,f), Band(y,n2,g2,d,f), sim(n,n2) >= 95, sim(g,g2) >= 95 => eq(x,y);
        soft sigma "similar titles": Song(x,t,l,b), Song(y,t2,l,b), sim(t,t2) >= 95 ~> eq(x,y);
        deny delta: Appear(s,a,i), Appear(s,a,j), i != j;
    "#;

    #[test]
    fn running_example_counts() {
        let spec = parse_spec(EX).unwrap();
        assert_eq!(spec.hard.len(), 1);
        assert_eq!(spec.soft.len(), 1);
        assert_eq!(spec.dcs.len(), 1);
        assert_eq!(spec.soft[0].description.as_deref(), Some("similar titles"));
        assert_eq!(spec.hard[0].body.sims[0].threshold, Score(9500));
        assert_eq!(spec.hard[0].body.sims[0].func, SimFunc::Jw);
    }

    #[test]
    fn empty_rule_block_is_valid() {
        let spec = parse_spec("relation R(a:id) merge [a];").unwrap();
        assert!(spec.hard.is_empty() && spec.soft.is_empty() && spec.dcs.is_empty());
    }

    #[test]
    fn unsafe_head() {
        let src = "relation R(a:id, b:val) merge [a]; hard h: R(x,v), R(x2,v) => eq(x,y);";
        assert!(matches!(
            parse_spec(src),
            Err(SpecError::UnsafeHeadVariable { ref var, .. }) if var == "y"
        ));
    }

    #[test]
    fn unknown_relation_and_arity() {
        let src = "relation R(a:id) merge [a]; hard h: S(x), R(y) => eq(x,y);";
        assert!(matches!(
            parse_spec(src),
            Err(SpecError::UnknownRelation { line: 1, .. })
        ));
        let src = "relation R(a:id) merge [a];\nhard h: R(x,z), R(y) => eq(x,y);";
        assert!(matches!(
            parse_spec(src),
            Err(SpecError::ArityMismatch { line: 2, expected: 1, found: 2, .. })
        ));
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_spec("relation R(a:id)\n  merge [a] hard").unwrap_err();
        assert!(matches!(err, SpecError::Syntax { line: 2, col: 13, .. }), "{err}");
    }

    #[test]
    fn arrow_must_match_kind() {
        let src = "relation R(a:id, b:val) merge [a]; soft s: R(x,v), R(y,v) => eq(x,y);";
        assert!(matches!(parse_spec(src), Err(SpecError::Syntax { .. })));
    }

    #[test]
    fn labels_are_unique() {
        let src = "relation R(a:id, b:val) merge [a];
            hard h: R(x,v), R(y,v) => eq(x,y);
            soft h: R(x,v), R(y,v) ~> eq(x,y);";
        assert!(matches!(parse_spec(src), Err(SpecError::Invalid { line: 3, .. })));
    }

    #[test]
    fn sim_atoms_rejected_in_denials() {
        let src = "relation R(a:id, b:short) merge [a]; deny d: R(x,v), R(y,w), sim(v,w) >= 50;";
        assert!(matches!(parse_spec(src), Err(SpecError::Invalid { .. })));
    }

    #[test]
    fn inequalities_rejected_in_rules() {
        let src = "relation R(a:id, b:val) merge [a]; hard h: R(x,v), R(y,w), v != w => eq(x,y);";
        assert!(matches!(parse_spec(src), Err(SpecError::Invalid { .. })));
    }

    #[test]
    fn head_needs_merge_position() {
        let src = "relation R(a:id, b:id) merge [a]; hard h: R(v,x), R(v,y) => eq(x,y);";
        assert!(matches!(parse_spec(src), Err(SpecError::Invalid { .. })));
    }

    #[test]
    fn explicit_functions_and_constants() {
        let src = r#"relation R(a:id, b:val, c:long) merge [a];
            sim default = auto;
            hard h: R(x,"k",c), R(y,_,c2), sim:lev(c,c2) >= 90.5 => eq(x,y);
            soft s: R(x,v,c), R(y,v,c2), sim(c,c2) >= 80 ~> eq(x,y);"#;
        let spec = parse_spec(src).unwrap();
        let h = &spec.hard[0];
        assert_eq!(h.body.sims[0].func, SimFunc::Lev);
        assert_eq!(h.body.sims[0].threshold, Score(9050));
        assert_eq!(h.body.atoms[0].terms[1], Term::Const("k".into()));
        assert!(matches!(&h.body.atoms[1].terms[1], Term::Var(v) if v.starts_with('_')));
        assert_eq!(spec.soft[0].body.sims[0].func, SimFunc::TfIdf);
    }

    #[test]
    fn default_function_applies() {
        let src = "relation R(a:id, b:short) merge [a]; sim default = table;
            hard h: R(x,v), R(y,w), sim(v,w) >= 95 => eq(x,y);";
        assert_eq!(parse_spec(src).unwrap().hard[0].body.sims[0].func, SimFunc::Table);
    }

    #[test]
    fn threshold_range() {
        let src = "relation R(a:id, b:short) merge [a]; hard h: R(x,v), R(y,w), sim(v,w) >= 101 => eq(x,y);";
        assert!(parse_spec(src).is_err());
        let src = "relation R(a:id, b:short) merge [a]; hard h: R(x,v), R(y,w), sim(v,w) >= 9.125 => eq(x,y);";
        assert!(parse_spec(src).is_err());
    }
}
