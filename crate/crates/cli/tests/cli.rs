use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(path)
}

fn relsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relsearch")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn machine_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .to_string()
}

fn build_small(dir: &Path, extra: &[&str]) -> (PathBuf, Output) {
    let index = dir.join("small.index");
    let corpus = fixture("corpus_small/corpus.jsonl");
    let gold = fixture("corpus_small/gold.tsv");
    let mut args = vec!["build", "--corpus", corpus.to_str().unwrap(), "--gold", gold.to_str().unwrap(), "--index", index.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = relsearch(&args);
    (index, out)
}

#[test]
fn build_query_stats_round() {
    let dir = tempfile::tempdir().unwrap();
    let (index, out) = build_small(dir.path(), &["--format", "machine"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout(&out);
    assert_eq!(machine_value(&report, "index_keys"), "13");
    assert_eq!(machine_value(&report, "postings"), "24");

    let out = relsearch(&["query", "Favipiravir", "--index", index.to_str().unwrap(), "--format", "machine"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["related"][0]["canonical"], "RdRp");

    let out = relsearch(&["query", "Favipiravir", "--index", index.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("matched: Favipiravir"), "{text}");
    assert!(text.contains("1. RdRp (Protein) — 4 co-mention(s)"), "{text}");

    let out = relsearch(&["stats", "--index", index.to_str().unwrap(), "--format", "machine"]);
    let text = stdout(&out);
    assert_eq!(machine_value(&text, "# Nodes (Entities)"), "15");
    assert_eq!(machine_value(&text, "# Diameter of the Largest Component"), "3");
    let out = relsearch(&["stats", "--index", index.to_str().unwrap()]);
    assert!(stdout(&out).lines().any(|l| l.starts_with("# Edges (Relations)") && l.ends_with("13")));
}

#[test]
fn sequential_flag_builds_the_same_index() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ia, oa) = build_small(a.path(), &[]);
    let (ib, ob) = build_small(b.path(), &["--sequential"]);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(std::fs::read(ia).unwrap(), std::fs::read(ib).unwrap());
}

#[test]
fn export_then_eval_and_external_replay() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("cue.tsv");
    let (cue_index, out) = build_small(dir.path(), &["--classifier", "cue-baseline", "--export-predictions", scores.to_str().unwrap(), "--format", "machine"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cue_keys = machine_value(&stdout(&out), "index_keys");

    let gold = fixture("corpus_small/gold.tsv");
    let out = relsearch(&["eval", "--predictions", scores.to_str().unwrap(), "--gold", gold.to_str().unwrap(), "--format", "machine"]);
    assert!(out.status.success());
    assert_eq!(machine_value(&stdout(&out), "instances"), "30");

    // the oracle replays the gold file, so its own export scores perfectly
    let oracle_scores = dir.path().join("oracle.tsv");
    let oracle_dir = tempfile::tempdir().unwrap();
    let (_, out) = build_small(oracle_dir.path(), &["--export-predictions", oracle_scores.to_str().unwrap()]);
    assert!(out.status.success());
    let out = relsearch(&["eval", "--predictions", oracle_scores.to_str().unwrap(), "--gold", gold.to_str().unwrap(), "--format", "machine"]);
    assert_eq!(machine_value(&stdout(&out), "f1"), "1.000000");

    // replaying exported scores through the external classifier reproduces the index
    let replay_dir = tempfile::tempdir().unwrap();
    let (replay_index, out) =
        build_small(replay_dir.path(), &["--classifier", "external", "--predictions", scores.to_str().unwrap(), "--format", "machine"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(machine_value(&stdout(&out), "index_keys"), cue_keys);
    assert_eq!(std::fs::read(cue_index).unwrap(), std::fs::read(replay_index).unwrap());
}

#[test]
fn chemprot_build() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("cp.index");
    let out = relsearch(&[
        "build",
        "--chemprot-dir",
        fixture("chemprot_small").to_str().unwrap(),
        "--index",
        index.to_str().unwrap(),
        "--precompute-simrank",
        "--format",
        "machine",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(machine_value(&text, "duplicate_relations"), "1");
    assert_eq!(machine_value(&text, "dropped_not_cosentential"), "1");
    let out = relsearch(&["query", "Metformin", "--index", index.to_str().unwrap(), "--format", "machine"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["related"][0]["canonical"], "AMPK");
}

#[test]
fn configuration_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let (_, out) = build_small(dir.path(), &["--classifier", "bert"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("small.index").exists());

    let out = relsearch(&["build", "--corpus", "/no/such/file.jsonl", "--index", dir.path().join("x").to_str().unwrap(), "--classifier", "cue-baseline"]);
    assert_eq!(out.status.code(), Some(1));
    let out = relsearch(&["build", "--index", "x"]);
    assert_eq!(out.status.code(), Some(1));
    let out = relsearch(&["query", "x", "--index", "/no/such.index"]);
    assert_eq!(out.status.code(), Some(1));
    let out = relsearch(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let (index, _) = build_small(dir.path(), &[]);
    let out = relsearch(&["query", "x", "--index", index.to_str().unwrap(), "--simrank-c", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = relsearch(&["query", "x", "--index", index.to_str().unwrap(), "--min-similarity", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(relsearch(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"kind\":\"doc\",\"doc_id\":\"D\",\"title\":\"t\"}\n").unwrap();
    let out = relsearch(&["build", "--corpus", bad.to_str().unwrap(), "--classifier", "cue-baseline", "--index", dir.path().join("i").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let (index, _) = build_small(dir.path(), &[]);
    let text = std::fs::read_to_string(&index).unwrap();
    std::fs::write(&index, text.replacen("Favipiravir", "Favipiravin", 1)).unwrap();
    let out = relsearch(&["query", "Favipiravir", "--index", index.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}
