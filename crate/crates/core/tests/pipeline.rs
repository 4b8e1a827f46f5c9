use std::fs;
use std::path::{Path, PathBuf};

use er_core::pipeline::{ingest, run, Mode, PipelineError, RunConfig, SimStrategy};
use er_core::{parse_spec, Engine, SimStore, Specification};

fn running_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/running")
}

fn running_spec() -> Specification {
    parse_spec(&fs::read_to_string(running_dir().join("music.er")).unwrap()).unwrap()
}

fn copy_running(to: &Path) {
    for f in ["Band.tsv", "Song.tsv", "Appear.tsv"] {
        fs::copy(running_dir().join(f), to.join(f)).unwrap();
    }
}

fn count(db: &er_core::Database, rel: &str) -> usize {
    db.facts_of(db.relation_id(rel).unwrap()).len()
}

#[test]
fn ingests_the_running_example() {
    let db = ingest(&running_dir(), &running_spec().schema, "").unwrap();
    assert_eq!(
        (count(&db, "Band"), count(&db, "Song"), count(&db, "Appear")),
        (2, 3, 3)
    );
    assert!(db.is_entity(db.entity("b1").unwrap()));
    assert_eq!(db.entity("Waters"), None);
}

#[test]
fn empty_cells_and_the_null_token_are_null() {
    let tmp = tempfile::tempdir().unwrap();
    copy_running(tmp.path());
    let song = fs::read_to_string(tmp.path().join("Song.tsv")).unwrap();
    let song = song.replacen("(I-IV)\tWaters", "(I-IV)\t", 1);
    let song = song.replacen("(V-IX)\tWaters", "(V-IX)\tNA", 1);
    fs::write(tmp.path().join("Song.tsv"), song).unwrap();
    let spec = running_spec();
    let db = ingest(tmp.path(), &spec.schema, "NA").unwrap();
    let song_rel = db.relation_id("Song").unwrap();
    let nulls = db
        .facts_of(song_rel)
        .iter()
        .filter(|&&f| db.is_null(db.fact(f).args[2]))
        .count();
    assert_eq!(nulls, 2);
    // without a shared lyricist the song rule never fires, even when every
    // similarity atom is taken as satisfied
    let sims = SimStore::new();
    let eng = Engine::new(&db, &spec, &sims);
    let merged: Vec<_> = eng
        .loose_ub()
        .unwrap()
        .pairs()
        .into_iter()
        .map(|p| p.texts(&db))
        .collect();
    assert_eq!(merged, [("b1".to_string(), "b2".to_string())]);
}

#[test]
fn duplicate_rows_collapse() {
    let tmp = tempfile::tempdir().unwrap();
    copy_running(tmp.path());
    let band = fs::read_to_string(tmp.path().join("Band.tsv")).unwrap();
    let dup = band.lines().nth(1).unwrap().to_string();
    fs::write(tmp.path().join("Band.tsv"), format!("{band}{dup}\n")).unwrap();
    let db = ingest(tmp.path(), &running_spec().schema, "").unwrap();
    assert_eq!(count(&db, "Band"), 2);
}

#[test]
fn csv_files_with_quotes() {
    let tmp = tempfile::tempdir().unwrap();
    copy_running(tmp.path());
    fs::remove_file(tmp.path().join("Band.tsv")).unwrap();
    fs::write(
        tmp.path().join("Band.csv"),
        "bid,name,genre,year,founder\nb1,\"Pink Floyd, The\",Psy. rock,1965,Barrett\n",
    )
    .unwrap();
    let db = ingest(tmp.path(), &running_spec().schema, "").unwrap();
    let f = db.facts_of(db.relation_id("Band").unwrap())[0];
    assert_eq!(db.text(db.fact(f).args[1]), "Pink Floyd, The");
}

#[test]
fn ingest_errors() {
    let spec = running_spec();
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(
        ingest(tmp.path(), &spec.schema, ""),
        Err(PipelineError::MissingFile(_))
    ));
    copy_running(tmp.path());
    fs::write(tmp.path().join("Appear.tsv"), "sid\talbum\tpos\ns1\tx\t1\n").unwrap();
    let err = ingest(tmp.path(), &spec.schema, "").unwrap_err();
    assert!(matches!(err, PipelineError::HeaderMismatch { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
    fs::write(tmp.path().join("Appear.tsv"), "sid\talbum\tposition\ns1\tx\t1\ns2\tx\n").unwrap();
    match ingest(tmp.path(), &spec.schema, "") {
        Err(PipelineError::RaggedRow { line, found, .. }) => assert_eq!((line, found), (3, 2)),
        other => panic!("{other:?}"),
    }
}

fn run_to_strings(cfg: RunConfig) -> (Result<(), PipelineError>, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let r = run(cfg, &mut out, &mut err);
    (r, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn running_config(mode: Mode, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(mode);
    cfg.spec = Some(running_dir().join("music.er"));
    cfg.data = Some(running_dir());
    cfg.sim = SimStrategy::Table(running_dir().join("sim.tsv"));
    cfg.out = Some(out.to_path_buf());
    cfg
}

#[test]
fn every_strategy_gives_the_same_maximal_solutions() {
    let mut outputs = Vec::new();
    for sim in [SimStrategy::All, SimStrategy::Cs, SimStrategy::Opt] {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = running_config(Mode::Maximal(usize::MAX), tmp.path());
        cfg.sim = sim;
        let (r, out, _) = run_to_strings(cfg);
        r.unwrap();
        outputs.push(out);
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn timings_and_warnings_go_to_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = tmp.path().join("truth.tsv");
    fs::write(&truth, "b1\tb2\n").unwrap();
    let mut cfg = running_config(Mode::Lb, tmp.path());
    cfg.truth = Some(truth.display().to_string());
    let (r, out, err) = run_to_strings(cfg);
    r.unwrap();
    assert_eq!(out, "b1\tb2\n");
    assert!(err.contains("timing: preprocess"));
    assert!(err.contains("precision 1 recall 1 f1 1"));
}

#[test]
fn sim_mode_writes_one_file_per_function() {
    let tmp = tempfile::tempdir().unwrap();
    let (r, out, _) = run_to_strings(running_config(Mode::Sim, tmp.path()));
    r.unwrap();
    assert!(out.starts_with("table: "));
    let tsv = fs::read_to_string(tmp.path().join("sim_table.tsv")).unwrap();
    assert!(tsv.contains("Pink Floyd\tThe Pink Floyd\t100"));
}

#[test]
fn unsafe_specifications_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("bad.er");
    fs::write(
        &spec,
        "relation R(a:id, b:id) merge [a, b];
         hard h: R(x, u), R(y, w), sim(u, w) >= 90 => eq(x, y);
         hard g: R(x, u), R(x, w) => eq(u, w);",
    )
    .unwrap();
    let mut cfg = RunConfig::new(Mode::Validate);
    cfg.spec = Some(spec);
    let (r, out, _) = run_to_strings(cfg);
    assert_eq!(r.unwrap_err().exit_code(), 2);
    assert!(out.starts_with("sim-safe: no"), "{out}");
}
