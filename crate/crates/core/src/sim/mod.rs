//! Similarity scores, score stores, and the strategies that decide which
//! constant pairs get scored.

mod scoring;
mod strategy;

pub use scoring::{sim_score, Scorer, SimTable, TfIdf};
pub use strategy::{sim_all, sim_cs, sim_opt, SimOpt, UbEqSet};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::model::{ConstId, Database};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("line {line}: {msg}")]
    Table { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Similarity score in hundredths of a percent, 0..=10000.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Score(pub u16);

impl Score {
    pub const MAX: Score = Score(10000);
    pub const ZERO: Score = Score(0);

    /// Rounds a similarity in [0, 1].
    pub fn from_unit(x: f64) -> Score {
        let x = if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 };
        Score((x * 10000.0).round() as u16)
    }

    /// Parses a percentage such as `95` or `87.25` (at most two decimals).
    pub fn parse_percent(s: &str) -> Option<Score> {
        let s = s.trim();
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() || frac.len() > 2 || !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let whole: u32 = int.parse().ok()?;
        let mut cents: u32 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        if frac.len() == 1 {
            cents *= 10;
        }
        let v = whole.checked_mul(100)?.checked_add(cents)?;
        (v <= 10000).then_some(Score(v as u16))
    }

    pub fn as_unit(self) -> f64 {
        self.0 as f64 / 10000.0
    }
}

impl fmt::Display for Score {
    /// Percentage with trailing zeros trimmed: `95`, `95.5`, `87.25`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (whole, cents) = (self.0 / 100, self.0 % 100);
        match cents {
            0 => write!(f, "{whole}"),
            c if c % 10 == 0 => write!(f, "{whole}.{}", c / 10),
            c => write!(f, "{whole}.{c:02}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimFunc {
    /// Routed per pair: numbers by edit distance, short strings by
    /// Jaro-Winkler, long strings by TF-IDF cosine.
    Auto,
    Lev,
    Jw,
    TfIdf,
    /// Lookup in a user-supplied extension.
    Table,
}

impl SimFunc {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "auto" => Self::Auto,
            "lev" => Self::Lev,
            "jw" => Self::Jw,
            "tfidf" => Self::TfIdf,
            "table" => Self::Table,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Lev => "lev",
            Self::Jw => "jw",
            Self::TfIdf => "tfidf",
            Self::Table => "table",
        }
    }
}

impl fmt::Display for SimFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where rule evaluation gets similarity scores from.
pub trait SimSource: Sync {
    /// `None` if the pair was never scored.
    fn score(&self, func: SimFunc, a: ConstId, b: ConstId) -> Option<Score>;
}

type SimKey = (SimFunc, ConstId, ConstId);

fn key(func: SimFunc, a: ConstId, b: ConstId) -> SimKey {
    if a <= b {
        (func, a, b)
    } else {
        (func, b, a)
    }
}

/// Materialized similarity facts, symmetric by construction, plus the number
/// of scorer invocations that produced them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimStore {
    scores: BTreeMap<SimKey, Score>,
    calls: usize,
}

impl SimStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, func: SimFunc, a: ConstId, b: ConstId) -> Option<Score> {
        self.scores.get(&key(func, a, b)).copied()
    }

    pub fn contains(&self, func: SimFunc, a: ConstId, b: ConstId) -> bool {
        self.scores.contains_key(&key(func, a, b))
    }

    /// Records a score obtained from one scorer call.
    pub fn record(&mut self, func: SimFunc, a: ConstId, b: ConstId, s: Score) {
        self.calls += 1;
        self.scores.insert(key(func, a, b), s);
    }

    /// Inserts without counting a scorer call (precomputed facts).
    pub fn insert(&mut self, func: SimFunc, a: ConstId, b: ConstId, s: Score) {
        self.scores.insert(key(func, a, b), s);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn call_count(&self) -> usize {
        self.calls
    }

    pub fn keys(&self) -> impl Iterator<Item = (SimFunc, ConstId, ConstId)> + '_ {
        self.scores.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((SimFunc, ConstId, ConstId), Score)> + '_ {
        self.scores.iter().map(|(k, v)| (*k, *v))
    }

    pub fn funcs(&self) -> Vec<SimFunc> {
        let mut f: Vec<SimFunc> = self.scores.keys().map(|k| k.0).collect();
        f.dedup();
        f
    }

    /// `a<TAB>b<TAB>score` rows for one function, one per canonical pair,
    /// sorted by constant text.
    pub fn export_tsv(&self, db: &Database, func: SimFunc) -> String {
        let mut rows: Vec<(String, String, Score)> = self
            .scores
            .iter()
            .filter(|(k, _)| k.0 == func)
            .map(|(k, s)| {
                let (x, y) = (db.text(k.1), db.text(k.2));
                if x <= y {
                    (x.to_string(), y.to_string(), *s)
                } else {
                    (y.to_string(), x.to_string(), *s)
                }
            })
            .collect();
        rows.sort();
        let mut out = String::new();
        for (a, b, s) in rows {
            out.push_str(&format!("{a}\t{b}\t{s}\n"));
        }
        out
    }

    pub(crate) fn merge_from(&mut self, other: SimStore) {
        self.calls += other.calls;
        self.scores.extend(other.scores);
    }
}

impl SimSource for SimStore {
    fn score(&self, func: SimFunc, a: ConstId, b: ConstId) -> Option<Score> {
        match self.get(func, a, b) {
            Some(s) => Some(s),
            None if a == b => Some(Score::MAX),
            None => None,
        }
    }
}

/// Scores pairs the first time rule evaluation asks for them and remembers
/// every score, including those below threshold.
pub struct OnDemand<'a> {
    db: &'a Database,
    scorer: &'a Scorer,
    cache: Mutex<BTreeMap<SimKey, Score>>,
    calls: AtomicUsize,
}

impl<'a> OnDemand<'a> {
    pub fn new(db: &'a Database, scorer: &'a Scorer) -> Self {
        Self {
            db,
            scorer,
            cache: Mutex::new(BTreeMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn into_store(self) -> SimStore {
        SimStore {
            scores: self.cache.into_inner().expect("scorer cache poisoned"),
            calls: self.calls.into_inner(),
        }
    }
}

impl SimSource for OnDemand<'_> {
    fn score(&self, func: SimFunc, a: ConstId, b: ConstId) -> Option<Score> {
        let k = key(func, a, b);
        let mut cache = self.cache.lock().expect("scorer cache poisoned");
        if let Some(s) = cache.get(&k) {
            return Some(*s);
        }
        let s = self
            .scorer
            .score(func, self.db.constant(k.1), self.db.constant(k.2));
        self.calls.fetch_add(1, Ordering::Relaxed);
        cache.insert(k, s);
        Some(s)
    }
}
