//! End-to-end runs: load a specification and data, materialize similarity
//! facts, run one operation, write the results.

mod io;
mod metrics;

pub use io::{
    ingest, merges_tsv, parse_clusters, parse_pairs, read_truth, text_pair, text_pairs, TextPair,
};
pub use metrics::{evaluate, Metrics, Rational};

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::engine::{Engine, EngineOptions, LevelsScope, Solution};
use crate::exec::Exec;
use crate::explain::{proof_tree, summary, to_dot, to_json};
use crate::matcher::{EvalOptions, NullInequality};
use crate::model::{Database, EqRel, MergePair};
use crate::sim::{sim_all, sim_cs, sim_opt, Scorer, SimFunc, SimStore, SimTable};
use crate::spec::{data_sim_conflicts, parse_spec, validate_sim_safety, Specification};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Spec(String),
    #[error("missing relation file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: header is `{found}`, expected `{expected}`", file.display())]
    HeaderMismatch {
        file: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{}:{line}: {found} fields, expected {expected}", file.display())]
    RaggedRow {
        file: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{0}")]
    Data(String),
    #[error("no solution: {0}")]
    NoSolution(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Spec(_) => 2,
            PipelineError::MissingFile(_)
            | PipelineError::HeaderMismatch { .. }
            | PipelineError::RaggedRow { .. }
            | PipelineError::Data(_) => 3,
            PipelineError::NoSolution(_) => 4,
        }
    }
}

impl From<crate::engine::EngineError> for PipelineError {
    fn from(e: crate::engine::EngineError) -> Self {
        PipelineError::Spec(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimStrategy {
    All,
    Cs,
    Opt,
    /// Every similarity atom looks up this table.
    Table(PathBuf),
}

impl SimStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(Self::All),
            "cs" => Some(Self::Cs),
            "opt" => Some(Self::Opt),
            _ => s
                .strip_prefix("table:")
                .filter(|p| !p.is_empty())
                .map(|p| Self::Table(PathBuf::from(p))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Validate,
    Sim,
    Lb,
    Ub,
    LooseUb,
    SolveOne,
    Enumerate(usize),
    Maximal(usize),
    Pm,
    Cm,
    Levels,
    Explain(String, String),
    Eval,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        let count = |n: &str| n.parse::<usize>().ok();
        Some(match s {
            "validate" => Self::Validate,
            "sim" => Self::Sim,
            "lb" => Self::Lb,
            "ub" => Self::Ub,
            "loose-ub" => Self::LooseUb,
            "solve-one" => Self::SolveOne,
            "pm" => Self::Pm,
            "cm" => Self::Cm,
            "levels" => Self::Levels,
            "eval" => Self::Eval,
            "enumerate" => Self::Enumerate(usize::MAX),
            "maximal" => Self::Maximal(usize::MAX),
            _ => {
                if let Some(n) = s.strip_prefix("enumerate:") {
                    Self::Enumerate(count(n)?)
                } else if let Some(n) = s.strip_prefix("maximal:") {
                    Self::Maximal(count(n)?)
                } else if let Some(p) = s.strip_prefix("explain:") {
                    let (a, b) = p.split_once(',')?;
                    Self::Explain(a.trim().to_string(), b.trim().to_string())
                } else {
                    return None;
                }
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub sim: SimStrategy,
    pub mode: Mode,
    pub out: Option<PathBuf>,
    /// Pair file, or `clusters:FILE`.
    pub truth: Option<String>,
    /// Merges to score in `eval` mode.
    pub merges: Option<PathBuf>,
    pub null_token: String,
    pub levels_scope: LevelsScope,
    pub null_inequality: NullInequality,
    pub exec: Exec,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            spec: None,
            data: None,
            sim: SimStrategy::Opt,
            mode,
            out: None,
            truth: None,
            merges: None,
            null_token: String::new(),
            levels_scope: LevelsScope::Solution,
            null_inequality: NullInequality::Distinct,
            exec: Exec::default(),
        }
    }
}

#[derive(Default)]
struct Timing {
    preprocess: Duration,
    fixpoint: Duration,
    solve: Duration,
}

struct Loaded {
    spec: Specification,
    db: Database,
    sims: SimStore,
}

struct Runner<'w> {
    cfg: RunConfig,
    stdout: &'w mut dyn Write,
    stderr: &'w mut dyn Write,
    timing: Timing,
}

fn out_err(e: std::io::Error) -> PipelineError {
    PipelineError::Data(format!("cannot write output: {e}"))
}

impl Runner<'_> {
    fn say(&mut self, text: &str) -> Result<(), PipelineError> {
        self.stdout.write_all(text.as_bytes()).map_err(out_err)
    }

    fn warn(&mut self, text: &str) {
        let _ = writeln!(self.stderr, "warning: {text}");
    }

    fn write_file(&mut self, name: &str, contents: &str) -> Result<(), PipelineError> {
        if let Some(dir) = &self.cfg.out {
            fs::create_dir_all(dir).map_err(out_err)?;
            fs::write(dir.join(name), contents).map_err(out_err)?;
        }
        Ok(())
    }

    fn load_spec(&mut self) -> Result<Specification, PipelineError> {
        let path = self
            .cfg
            .spec
            .clone()
            .ok_or_else(|| PipelineError::Usage("--spec is required".into()))?;
        let src = fs::read_to_string(&path)
            .map_err(|e| PipelineError::Usage(format!("{}: {e}", path.display())))?;
        parse_spec(&src).map_err(|e| PipelineError::Spec(format!("{}: {e}", path.display())))
    }

    fn load(&mut self, spec: Specification) -> Result<Loaded, PipelineError> {
        let started = Instant::now();
        let unsafe_positions = validate_sim_safety(&spec);
        if !unsafe_positions.is_empty() {
            let lines: Vec<String> = unsafe_positions.iter().map(|v| v.to_string()).collect();
            return Err(PipelineError::Spec(format!(
                "specification is not sim-safe: {}",
                lines.join("; ")
            )));
        }
        let dir = self
            .cfg
            .data
            .clone()
            .ok_or_else(|| PipelineError::Usage("--data is required".into()))?;
        let db = ingest(&dir, &spec.schema, &self.cfg.null_token)?;
        for c in data_sim_conflicts(&spec, &db) {
            self.warn(&format!("{c} occurs in both a merge column and a similarity column"));
        }
        let opts = EvalOptions::default().with_null_inequality(self.cfg.null_inequality);
        let exec = self.cfg.exec;
        let (spec, sims) = match &self.cfg.sim {
            SimStrategy::All => {
                let scorer = Scorer::for_spec(&db, &spec);
                let s = sim_all(&db, &spec, &scorer, exec);
                (spec, s)
            }
            SimStrategy::Cs => {
                let scorer = Scorer::for_spec(&db, &spec);
                let s = sim_cs(&db, &spec, &scorer, exec);
                (spec, s)
            }
            SimStrategy::Opt => {
                let scorer = Scorer::for_spec(&db, &spec);
                let s = sim_opt(&db, &spec, &scorer, opts, exec).store;
                (spec, s)
            }
            SimStrategy::Table(path) => {
                let table = SimTable::load(path)
                    .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?;
                let spec = spec.with_sim_func(SimFunc::Table);
                let scorer = Scorer::for_spec(&db, &spec).with_table(table);
                let s = sim_opt(&db, &spec, &scorer, opts, exec).store;
                (spec, s)
            }
        };
        self.timing.preprocess = started.elapsed();
        Ok(Loaded { spec, db, sims })
    }

    fn engine<'a>(&self, l: &'a Loaded) -> Engine<'a> {
        Engine::new(&l.db, &l.spec, &l.sims).with_options(EngineOptions {
            eval: EvalOptions::default().with_null_inequality(self.cfg.null_inequality),
            exec: self.cfg.exec,
            levels_scope: self.cfg.levels_scope,
        })
    }

    fn emit_merges(
        &mut self,
        file: &str,
        db: &Database,
        pairs: &BTreeSet<MergePair>,
    ) -> Result<BTreeSet<TextPair>, PipelineError> {
        let texts = text_pairs(db, pairs);
        let tsv = merges_tsv(&texts);
        self.write_file(file, &tsv)?;
        self.say(&tsv)?;
        Ok(texts)
    }

    fn score_against_truth(&mut self, result: &BTreeSet<TextPair>) -> Result<(), PipelineError> {
        let Some(truth) = self.cfg.truth.clone() else {
            return Ok(());
        };
        let truth = read_truth(&truth)?;
        let m = evaluate(result, &truth);
        if result.is_empty() {
            self.warn("empty result: precision taken as 1");
        }
        let json = serde_json::to_string_pretty(&m.to_json()).expect("metrics serialize");
        self.write_file("metrics.json", &(json.clone() + "\n"))?;
        let _ = writeln!(
            self.stderr,
            "precision {} recall {} f1 {}",
            m.precision, m.recall, m.f1
        );
        Ok(())
    }

    fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *slot += t.elapsed();
        out
    }

    fn first_maximal(&mut self, eng: &Engine<'_>) -> Result<Solution, PipelineError> {
        let max = Self::timed(&mut self.timing.solve, || eng.maximal_solutions(1))?;
        max.into_iter()
            .next()
            .ok_or_else(|| PipelineError::NoSolution("the specification has no solution".into()))
    }

    fn run(&mut self) -> Result<(), PipelineError> {
        if self.cfg.mode == Mode::Eval {
            return self.eval();
        }
        let spec = self.load_spec()?;
        if self.cfg.mode == Mode::Validate {
            let violations = validate_sim_safety(&spec);
            self.say(&format!("{}\n", spec.summary()))?;
            for v in &violations {
                self.say(&format!("  {v}\n"))?;
            }
            if !violations.is_empty() {
                return Err(PipelineError::Spec("specification is not sim-safe".into()));
            }
            return Ok(());
        }
        let loaded = self.load(spec)?;
        let eng = self.engine(&loaded);
        let db = &loaded.db;
        match self.cfg.mode.clone() {
            Mode::Validate | Mode::Eval => unreachable!("handled above"),
            Mode::Sim => {
                let funcs: Vec<SimFunc> = loaded.sims.funcs();
                for f in funcs {
                    let tsv = loaded.sims.export_tsv(db, f);
                    self.write_file(&format!("sim_{f}.tsv"), &tsv)?;
                    self.say(&format!("{f}: {} pairs\n", tsv.lines().count()))?;
                }
                self.say(&format!("scorer calls: {}\n", loaded.sims.call_count()))?;
            }
            Mode::Lb | Mode::Ub | Mode::LooseUb => {
                let (file, e) = Self::timed(&mut self.timing.fixpoint, || match self.cfg.mode {
                    Mode::Lb => ("lb.tsv", eng.lb()),
                    Mode::Ub => ("ub.tsv", eng.ub()),
                    _ => ("loose-ub.tsv", eng.loose_ub()),
                });
                let texts = self.emit_merges(file, db, &e?.pairs())?;
                self.score_against_truth(&texts)?;
            }
            Mode::SolveOne => {
                let sol = Self::timed(&mut self.timing.solve, || eng.solve_one())?
                    .ok_or_else(|| PipelineError::NoSolution("the specification has no solution".into()))?;
                let texts = self.emit_merges("solution.tsv", db, &sol.pairs())?;
                self.score_against_truth(&texts)?;
            }
            Mode::Enumerate(n) | Mode::Maximal(n) => {
                let maximal = matches!(self.cfg.mode, Mode::Maximal(_));
                let sols = Self::timed(&mut self.timing.solve, || {
                    if maximal {
                        eng.maximal_solutions(n)
                    } else {
                        eng.enumerate_solutions(n)
                    }
                })?;
                let stem = if maximal { "maximal" } else { "solution" };
                for (k, s) in sols.iter().enumerate() {
                    self.say(&format!("# {stem} {}\n", k + 1))?;
                    self.emit_merges(&format!("{stem}_{}.tsv", k + 1), db, &s.pairs())?;
                }
                if sols.is_empty() && n > 0 {
                    return Err(PipelineError::NoSolution("the specification has no solution".into()));
                }
            }
            Mode::Pm | Mode::Cm => {
                let sets = Self::timed(&mut self.timing.solve, || eng.merge_sets())?;
                if !sets.consistent {
                    self.emit_merges(if self.cfg.mode == Mode::Pm { "pm.tsv" } else { "cm.tsv" }, db, &BTreeSet::new())?;
                    return Err(PipelineError::NoSolution(
                        "inconsistent specification: possible and certain merges are empty".into(),
                    ));
                }
                let (file, pairs) = if self.cfg.mode == Mode::Pm {
                    ("pm.tsv", sets.pm)
                } else {
                    ("cm.tsv", sets.cm)
                };
                let texts = self.emit_merges(file, db, &pairs)?;
                self.score_against_truth(&texts)?;
            }
            Mode::Levels => {
                let sol = self.first_maximal(&eng)?;
                let levels = Self::timed(&mut self.timing.solve, || eng.levels(&sol.eq))?;
                let mut rows: Vec<(TextPair, usize)> = levels
                    .iter()
                    .map(|(p, l)| (text_pair(db.text(p.left()), db.text(p.right())), l))
                    .collect();
                rows.sort();
                let mut tsv = String::new();
                for ((a, b), l) in rows {
                    tsv.push_str(&format!("{a}\t{b}\t{l}\n"));
                }
                self.write_file("levels.tsv", &tsv)?;
                self.say(&tsv)?;
                let _ = writeln!(
                    self.stderr,
                    "levels chain stabilized after {} steps",
                    levels.chain().len() - 1
                );
            }
            Mode::Explain(a, b) => {
                let (Some(ca), Some(cb)) = (db.entity(&a), db.entity(&b)) else {
                    return Err(PipelineError::Usage(format!(
                        "({a}, {b}) does not name two entity references of the data"
                    )));
                };
                let max = Self::timed(&mut self.timing.solve, || eng.maximal_solutions(usize::MAX))?;
                if max.is_empty() {
                    return Err(PipelineError::NoSolution("the specification has no solution".into()));
                }
                let sol: &EqRel = max
                    .iter()
                    .map(|s| &s.eq)
                    .find(|e| ca != cb && e.same(ca, cb))
                    .ok_or_else(|| {
                        PipelineError::NoSolution(format!("({a}, {b}) is not merged in any maximal solution"))
                    })?;
                let tree = proof_tree(&eng, sol, ca, cb).map_err(|e| PipelineError::Spec(e.to_string()))?;
                let dot = to_dot(&tree, db);
                let json = serde_json::to_string_pretty(&to_json(&tree, db, &loaded.spec))
                    .expect("tree serializes");
                let text = summary(&tree, db, &loaded.spec);
                self.write_file("explain.dot", &dot)?;
                self.write_file("explain.json", &(json + "\n"))?;
                self.write_file("explain.txt", &text)?;
                self.say(&text)?;
                self.say(&format!("rule depth: {}\n", tree.rule_depth()))?;
            }
        }
        Ok(())
    }

    fn eval(&mut self) -> Result<(), PipelineError> {
        let merges = self
            .cfg
            .merges
            .clone()
            .ok_or_else(|| PipelineError::Usage("eval mode needs --merges FILE".into()))?;
        if self.cfg.truth.is_none() {
            return Err(PipelineError::Usage("eval mode needs --truth FILE".into()));
        }
        let text = fs::read_to_string(&merges)
            .map_err(|e| PipelineError::Data(format!("{}: {e}", merges.display())))?;
        let result = parse_pairs(&text)?;
        let truth = read_truth(self.cfg.truth.as_deref().expect("checked"))?;
        let m = evaluate(&result, &truth);
        if result.is_empty() {
            self.warn("empty result: precision taken as 1");
        }
        let json = serde_json::to_string_pretty(&m.to_json()).expect("metrics serialize") + "\n";
        self.write_file("metrics.json", &json)?;
        self.say(&json)
    }
}

/// Runs one configuration, writing results to `stdout` (and to files under
/// `cfg.out`) and diagnostics and timings to `stderr`.
pub fn run(cfg: RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), PipelineError> {
    let mut r = Runner {
        cfg,
        stdout,
        stderr,
        timing: Timing::default(),
    };
    let result = r.run();
    let t = &r.timing;
    if !matches!(r.cfg.mode, Mode::Validate | Mode::Eval) {
        let _ = writeln!(
            r.stderr,
            "timing: preprocess {:.3?}, fixpoint {:.3?}, solve {:.3?}",
            t.preprocess, t.fixpoint, t.solve
        );
    }
    result
}
