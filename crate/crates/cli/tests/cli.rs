use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn sample() -> PathBuf {
    root().join("data/sample/transcription.evt")
}

fn metadata() -> PathBuf {
    root().join("data/reference/metadata.csv")
}

fn cli<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_folio-topics"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_succeeds_and_usage_errors_are_validation_failures() {
    assert_eq!(code(&cli(["--help"])), 0);
    assert_eq!(code(&cli(["run", "--bogus"])), 1);
    assert_eq!(code(&cli::<[&str; 0], &str>([])), 1);
}

#[test]
fn unknown_preset_and_missing_input_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = cli(["run", "analysis9", "--out", p(&out), "--data-root", p(&root())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown preset"), "{}", stderr(&o));

    let o = cli(["run", "analysis3", "--out", p(&out), "--transcription", "/nonexistent/t.evt", "--metadata", p(&metadata())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("/nonexistent/t.evt"));
    assert!(!out.exists());
}

#[test]
fn staged_verbs_chain_together() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let tokens = dir.join("tokens.jsonl");
    let o = cli([
        "tokenize", "--transcription", p(&sample()), "--metadata", p(&metadata()), "--exclude", "page_analysis", "--out", p(&tokens),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines = fs::read_to_string(&tokens).unwrap();
    assert!(lines.lines().count() > 200);
    assert!(!lines.contains("\"f57v\""));

    let fit = dir.join("fit");
    let o = cli(["fit", "--tokens", p(&tokens), "--model", "nmf", "--k", "3", "--seed", "4", "--out", p(&fit)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("topic numbers are arbitrary"));
    for f in ["model.json", "topics.csv", "top_terms.csv"] {
        assert!(fit.join(f).is_file(), "{f}");
    }
    let model = fit.join("model.json");

    let mca = dir.join("mca");
    let o = cli(["mca", "--model", p(&model), "--tokens", p(&tokens), "--metadata", p(&metadata()), "--benzecri", "--out", p(&mca)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let inertia = fs::read_to_string(mca.join("inertia.csv")).unwrap();
    assert!(inertia.starts_with("dim,inertia,share,benzecri,benzecri_share\n"));

    let proj = dir.join("proj");
    let o = cli(["project", "--model", p(&model), "--tokens", p(&tokens), "--metadata", p(&metadata()), "--method", "pca", "--out", p(&proj)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(proj.join("projection.csv")).unwrap().starts_with("# method=pca"));

    let graphs = dir.join("graphs");
    let o = cli([
        "graph", "--metadata", p(&metadata()), "--model", p(&model), "--tokens", p(&tokens), "--pair", "hand,subject", "--pair", "topic,hand",
        "--composite", "--out", p(&graphs),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["graph_hand_subject.dot", "graph_topic_hand.graphml", "graph_hand_subject-topic.dot"] {
        assert!(graphs.join(f).is_file(), "{f}");
    }

    // A model over other documents is rejected.
    let short = dir.join("short.jsonl");
    fs::write(&short, lines.lines().take(5).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    let o = cli(["mca", "--model", p(&model), "--tokens", p(&short), "--metadata", p(&metadata()), "--out", p(&mca)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn numerical_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let tokens = dir.join("tokens.jsonl");
    let docs: String = ["f1r", "f1v", "f2r"]
        .iter()
        .map(|pg| format!("{{\"id\":\"{pg}\",\"page\":\"{pg}\",\"mode\":\"page\",\"tokens\":[\"daiin\"]}}\n"))
        .collect();
    fs::write(&tokens, docs).unwrap();
    let model = dir.join("model.json");
    fs::write(
        &model,
        r#"{"kind":"nmf","k":2,"seed":0,"doc_ids":["f1r","f1v","f2r"],"vocabulary":["daiin"],
            "doc_topic":[[0.5,0.5],[0.5,0.5],[0.5,0.5]],"topic_term":[[1.0],[1.0]]}"#,
    )
    .unwrap();
    let o = cli(["project", "--model", p(&model), "--tokens", p(&tokens), "--metadata", p(&metadata()), "--method", "pca", "--out", p(&dir.join("o"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("zero variance"));
}

#[test]
fn run_report_and_manifest_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let o = cli(["run", "analysis2", "--seed", "3", "--out", p(&a), "--data-root", p(&root())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("topic numbers are arbitrary"));

    let o = cli(["report", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("outputs match the manifest"));

    let b = tmp.path().join("b");
    let o = cli(["run", p(&a.join("manifest.json")), "--out", p(&b)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["manifest.json", "assignments.csv", "top_terms.csv", "projection.csv", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let c = tmp.path().join("c");
    let o = cli(["run", "--config", p(&a.join("config.toml")), "--out", p(&c)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(a.join("assignments.csv")).unwrap(), fs::read(c.join("assignments.csv")).unwrap());

    fs::write(a.join("top_terms.csv"), "tampered\n").unwrap();
    let o = cli(["report", p(&a)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("top_terms.csv"));
}

#[test]
fn timings_are_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = cli(["run", "analysis2", "--out", p(&out), "--data-root", p(&root()), "--record-timings"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("timings_seconds"));
}
