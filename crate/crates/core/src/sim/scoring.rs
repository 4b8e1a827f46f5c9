use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use super::{Score, SimError, SimFunc};
use crate::model::{Constant, Database};
use crate::spec::Specification;

/// Strings at least this long count as long text.
const LONG_TEXT: usize = 25;

fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// TF-IDF model over a fixed corpus of values.
#[derive(Clone, Debug, Default)]
pub struct TfIdf {
    docs: usize,
    df: HashMap<String, usize>,
}

impl TfIdf {
    pub fn new<'a>(corpus: impl IntoIterator<Item = &'a str>) -> Self {
        let distinct: BTreeSet<&str> = corpus.into_iter().collect();
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in &distinct {
            let toks: BTreeSet<String> = tokens(doc).into_iter().collect();
            for t in toks {
                *df.entry(t).or_default() += 1;
            }
        }
        Self {
            docs: distinct.len(),
            df,
        }
    }

    pub fn idf(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(0) as f64;
        ((1.0 + self.docs as f64) / (1.0 + df)).ln() + 1.0
    }

    fn vector(&self, s: &str) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens(s) {
            *tf.entry(t).or_default() += 1.0;
        }
        for (t, w) in tf.iter_mut() {
            *w *= self.idf(t);
        }
        let norm = tf.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for w in tf.values_mut() {
                *w /= norm;
            }
        }
        tf
    }

    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        let (va, vb) = (self.vector(a), self.vector(b));
        va.iter()
            .filter_map(|(t, w)| vb.get(t).map(|u| w * u))
            .sum()
    }
}

/// Fixed similarity extension keyed by constant text, symmetric by
/// construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimTable {
    scores: BTreeMap<(String, String), Score>,
}

fn canon(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SimTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str, s: Score) {
        self.scores.insert(canon(a, b), s);
    }

    pub fn get(&self, a: &str, b: &str) -> Score {
        if a == b {
            return Score::MAX;
        }
        self.scores.get(&canon(a, b)).copied().unwrap_or(Score::ZERO)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Reads `a<TAB>b<TAB>score` rows, scores in percent with at most two
    /// decimals. Blank lines and `#` comments are skipped. A pair listed
    /// twice with different scores is an error.
    pub fn read_tsv(reader: impl BufRead) -> Result<Self, SimError> {
        let mut table = SimTable::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() != 3 {
                return Err(SimError::Table {
                    line: i + 1,
                    msg: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let s = Score::parse_percent(cols[2]).ok_or_else(|| SimError::Table {
                line: i + 1,
                msg: format!("bad score `{}`", cols[2]),
            })?;
            let k = canon(cols[0], cols[1]);
            if let Some(prev) = table.scores.get(&k) {
                if *prev != s {
                    return Err(SimError::Table {
                        line: i + 1,
                        msg: format!("conflicting scores for ({}, {})", k.0, k.1),
                    });
                }
            }
            table.scores.insert(k, s);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SimError> {
        let f = std::fs::File::open(path)?;
        Self::read_tsv(std::io::BufReader::new(f))
    }
}

/// The similarity functions, with the TF-IDF corpus and optional table they
/// depend on.
#[derive(Clone, Debug, Default)]
pub struct Scorer {
    tfidf: TfIdf,
    table: Option<SimTable>,
}

impl Scorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// TF-IDF corpus = every non-null value found in a column compared by
    /// some similarity atom of `spec`.
    pub fn for_spec(db: &Database, spec: &Specification) -> Self {
        let mut corpus = BTreeSet::new();
        for (rel, positions) in spec.sim_positions() {
            let Some(rid) = db.relation_id(&rel) else { continue };
            for &f in db.facts_of(rid) {
                for &p in &positions {
                    let c = db.constant(db.fact(f).args[p]);
                    if !c.is_null() {
                        corpus.insert(c.text().to_string());
                    }
                }
            }
        }
        Self {
            tfidf: TfIdf::new(corpus.iter().map(String::as_str)),
            table: None,
        }
    }

    pub fn with_table(mut self, table: SimTable) -> Self {
        self.table = Some(table);
        self
    }

    pub fn table(&self) -> Option<&SimTable> {
        self.table.as_ref()
    }

    pub fn score(&self, func: SimFunc, a: &Constant, b: &Constant) -> Score {
        if a.is_null() || b.is_null() {
            return Score::ZERO;
        }
        self.score_text(func, a.text(), b.text())
    }

    pub fn score_text(&self, func: SimFunc, a: &str, b: &str) -> Score {
        match func {
            SimFunc::Lev => lev(a, b),
            SimFunc::Jw => Score::from_unit(strsim::jaro_winkler(a, b)),
            SimFunc::TfIdf => Score::from_unit(self.tfidf.cosine(a, b)),
            SimFunc::Table => match &self.table {
                Some(t) => t.get(a, b),
                None if a == b => Score::MAX,
                None => Score::ZERO,
            },
            SimFunc::Auto => self.score_text(route(a, b), a, b),
        }
    }
}

fn lev(a: &str, b: &str) -> Score {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return Score::MAX;
    }
    let d = strsim::levenshtein(a, b) as f64;
    Score::from_unit(1.0 - d / longest as f64)
}

fn route(a: &str, b: &str) -> SimFunc {
    let numeric = |s: &str| s.trim().parse::<f64>().is_ok();
    if numeric(a) && numeric(b) {
        SimFunc::Lev
    } else if a.chars().count().max(b.chars().count()) < LONG_TEXT {
        SimFunc::Jw
    } else {
        SimFunc::TfIdf
    }
}

/// Scores a pair with no TF-IDF corpus (every token weighs the same) and no
/// table (only identical strings score).
pub fn sim_score(func: SimFunc, a: &str, b: &str) -> Score {
    Scorer::new().score_text(func, a, b)
}
