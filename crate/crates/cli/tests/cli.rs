use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/running")
}

fn er(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_er"))
        .arg("run")
        .args(args)
        .output()
        .expect("binary runs")
}

fn running(mode: &str, out: &Path, extra: &[&str]) -> Output {
    let d = data_dir();
    let spec = d.join("music.er");
    let table = format!("table:{}", d.join("sim.tsv").display());
    let mut args = vec![
        "--spec",
        spec.to_str().unwrap(),
        "--data",
        d.to_str().unwrap(),
        "--sim",
        &table,
        "--mode",
        mode,
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    er(&args)
}

fn metrics(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = running("validate", tmp.path(), &[]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "sim-safe: yes; 1 hard, 1 soft, 1 DC\n");
}

#[test]
fn maximal_writes_one_file_per_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let o = running("maximal:2", tmp.path(), &[]);
    assert!(o.status.success());
    let m1 = fs::read_to_string(tmp.path().join("maximal_1.tsv")).unwrap();
    let m2 = fs::read_to_string(tmp.path().join("maximal_2.tsv")).unwrap();
    assert_eq!(m1, "b1\tb2\ns1\ts2\n");
    assert_eq!(m2, "b1\tb2\ns2\ts3\n");
}

#[test]
fn pm_scored_against_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = tmp.path().join("truth.tsv");
    fs::write(&truth, "b2\tb1\ns1\ts2\n").unwrap();
    let o = running("pm", tmp.path(), &["--truth", truth.to_str().unwrap()]);
    assert!(o.status.success());
    let metrics = metrics(tmp.path());
    assert_eq!(metrics["precision"]["exact"], "2/3");
    assert_eq!(metrics["recall"]["exact"], "1");
    assert_eq!(metrics["f1"]["exact"], "4/5");

    let out2 = tmp.path().join("again");
    let o = er(&[
        "--mode",
        "eval",
        "--merges",
        tmp.path().join("pm.tsv").to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(out2.join("metrics.json")).unwrap(),
        fs::read(tmp.path().join("metrics.json")).unwrap()
    );
}

#[test]
fn cluster_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = tmp.path().join("clusters.tsv");
    fs::write(&truth, "b1\tB\nb2\tB\ns1\tS\ns2\tS\ns3\tT\n").unwrap();
    let arg = format!("clusters:{}", truth.display());
    let o = running("cm", tmp.path(), &["--truth", &arg]);
    assert!(o.status.success());
    let metrics = metrics(tmp.path());
    assert_eq!(metrics["precision"]["exact"], "1");
    assert_eq!(metrics["recall"]["exact"], "1/2");
}

#[test]
fn levels_and_explanations() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(running("levels", tmp.path(), &[]).status.success());
    assert_eq!(
        fs::read_to_string(tmp.path().join("levels.tsv")).unwrap(),
        "b1\tb2\t1\ns1\ts2\t2\n"
    );
    let o = running("explain:s2,s1", tmp.path(), &[]);
    assert!(o.status.success());
    let dot = fs::read_to_string(tmp.path().join("explain.dot")).unwrap();
    assert!(dot.starts_with("digraph proof {"));
    assert!(tmp.path().join("explain.json").is_file());
    assert!(stdout(&o).contains("rule depth: 2"));
}

#[test]
fn explaining_an_impossible_merge_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = running("explain:s1,s3", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for mode in ["ub", "levels", "maximal"] {
        running(mode, a.path(), &[]);
        running(mode, b.path(), &["--sequential"]);
    }
    for f in ["ub.tsv", "levels.tsv", "maximal_1.tsv", "maximal_2.tsv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(er(&["--mode", "nonsense"]).status.code(), Some(1));
    assert_eq!(er(&["--mode", "lb"]).status.code(), Some(1));
    let bare = Command::new(env!("CARGO_BIN_EXE_er")).output().unwrap();
    assert_eq!(bare.status.code(), Some(1));

    let bad = tmp.path().join("bad.er");
    fs::write(&bad, "relation R(a:id) merge [a];\nhard r: R(x) => ").unwrap();
    let d = data_dir();
    let o = er(&[
        "--spec",
        bad.to_str().unwrap(),
        "--data",
        d.to_str().unwrap(),
        "--mode",
        "lb",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let spec = d.join("music.er");
    let o = er(&[
        "--spec",
        spec.to_str().unwrap(),
        "--data",
        empty.to_str().unwrap(),
        "--mode",
        "lb",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn inconsistent_hard_rules_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("s.er");
    fs::write(
        &spec,
        "relation P(pid:id, team:id, city:val) merge [pid, team];
         hard h: P(x,t,c), P(y,t,c2) => eq(x,y);
         deny d: P(x,t,c), P(x,t2,c2), c != c2;",
    )
    .unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("P.tsv"), "pid\tteam\tcity\np1\tt\tOslo\np2\tt\tRome\n").unwrap();
    let o = er(&[
        "--spec",
        spec.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--mode",
        "solve-one",
    ]);
    assert_eq!(o.status.code(), Some(4));
}
