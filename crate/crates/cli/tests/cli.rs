use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn boundseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boundseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = boundseg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, texts: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["--seed", "7", "synth", "--out", s(&out), "--texts", texts];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const SMALL: &[&str] = &[
    "--epochs", "3", "--filters", "6", "--units", "5", "--prosodic-filters", "3", "--prosodic-units", "4",
    "--word-dim", "8",
];

fn train(corpus: &Path, model: &Path, extra: &[&str]) {
    let mut args = vec!["--seed", "3", "--log-level", "warn", "train", "--corpus", s(corpus), "--out", s(model)];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn synth_is_deterministic_and_its_manifest_regenerates_it() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a", "6", &[]);
    let b = synth(dir.path(), "b", "6", &[]);
    assert_eq!(files(&a), files(&b));
    let names: Vec<String> = files(&a).into_iter().map(|(n, _)| n).collect();
    assert!(names.contains(&"embeddings.txt".to_string()));
    assert!(names.contains(&"manifest.conf".to_string()));
    assert_eq!(names.iter().filter(|n| n.ends_with(".tsv")).count(), 6);

    let c = dir.path().join("c");
    let manifest = a.join("manifest.conf");
    ok(&["synth", "--config", s(&manifest), "--out", s(&c)]);
    assert_eq!(files(&a), files(&c));

    let d = synth(dir.path(), "d", "6", &["--seed", "8"]);
    assert_ne!(files(&a), files(&d));
}

#[test]
fn synth_rejects_an_empty_corpus() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    let r = boundseg(&["synth", "--out", s(&out), "--texts", "0"]);
    assert_eq!(code(&r), 1);
}

#[test]
fn config_values_yield_to_explicit_flags() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# small corpus\ntexts = 4\nseed = 11\n").unwrap();
    let a = dir.path().join("a");
    ok(&["synth", "--config", s(&conf), "--out", s(&a), "--texts", "3"]);
    let manifest = fs::read_to_string(a.join("manifest.conf")).unwrap();
    assert!(manifest.contains("texts = 3"));
    assert!(manifest.contains("seed = 11"));

    fs::write(&conf, "colour = blue\n").unwrap();
    let r = boundseg(&["synth", "--config", s(&conf), "--out", s(&a)]);
    assert_eq!(code(&r), 1);
}

#[test]
fn training_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c", "6", &[]);
    let (m1, m2) = (dir.path().join("m1.dbnd"), dir.path().join("m2.dbnd"));
    train(&corpus, &m1, &[]);
    train(&corpus, &m2, &[]);
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
    let manifest = fs::read_to_string(dir.path().join("m1.dbnd.manifest")).unwrap();
    assert!(manifest.contains("epochs = 3"));
}

#[test]
fn segment_output_formats_and_errors() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c", "6", &[]);
    let model = dir.path().join("m.dbnd");
    train(&corpus, &model, &["--alpha", "0.6"]);

    let input = dir.path().join("in.txt");
    fs::write(&input, "a a então b b então\n").unwrap();

    // plain text carries no prosody, so only the lexical model can run
    let r = boundseg(&["segment", "--model", s(&model), "--input", s(&input)]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("--alpha 1.0"));

    let text = ok(&["segment", "--model", s(&model), "--input", s(&input), "--alpha", "1.0"]);
    let words: Vec<&str> = text.split_whitespace().filter(|w| *w != ".").collect();
    assert_eq!(words, ["a", "a", "então", "b", "b", "então"]);

    let tsv = ok(&["segment", "--model", s(&model), "--input", s(&input), "--alpha", "1", "--emit", "tsv"]);
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(row.len(), 3);
        let p: f64 = row[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(row[1].split('.').nth(1).unwrap().len(), 6);
        assert!(row[2] == "B" || row[2] == "NB");
        assert_eq!(row[2] == "B", p > 0.5);
    }

    // corpus files carry prosody, so the stored alpha applies
    let tsv_input = corpus.join("synth-000.tsv");
    let out = ok(&["segment", "--model", s(&model), "--input", s(&tsv_input), "--emit", "tsv"]);
    assert!(!out.is_empty());

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    assert_eq!(ok(&["segment", "--model", s(&model), "--input", s(&empty)]), "");

    let missing = dir.path().join("nope.dbnd");
    let r = boundseg(&["segment", "--model", s(&missing), "--input", s(&input)]);
    assert_eq!(code(&r), 1);
}

#[test]
fn damaged_model_is_reported() {
    let dir = TempDir::new().unwrap();
    let corpus = synth(dir.path(), "c", "4", &[]);
    let model = dir.path().join("m.dbnd");
    train(&corpus, &model, &["--epochs", "1"]);
    let mut bytes = fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    fs::write(&model, bytes).unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, "a b\n").unwrap();
    let r = boundseg(&["segment", "--model", s(&model), "--input", s(&input), "--alpha", "1"]);
    assert_eq!(code(&r), 2);
}

fn report_fields(line: &str) -> Vec<String> {
    line.split('\t').map(str::to_string).collect()
}

#[test]
fn eval_in_corpus_and_across_corpora() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a", "10", &[]);
    let b = synth(dir.path(), "b", "5", &["--seed", "9", "--cue", "aí", "--name", "b"]);
    let report = dir.path().join("report.tsv");

    let mut args = vec!["--jobs", "2", "eval", "--corpus", s(&a), "--report", s(&report)];
    args.extend_from_slice(SMALL);
    ok(&args);
    let mut args = vec!["eval", "--train-corpus", s(&a), "--test-corpus", s(&b), "--alpha", "0.8", "--report", s(&report)];
    args.extend_from_slice(SMALL);
    ok(&args);

    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<Vec<String>> = text.lines().map(report_fields).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(l.len(), 7);
        assert_eq!(l[1], "rcnn");
        for v in &l[3..] {
            let x: f64 = v.parse().unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
    }
    assert_eq!(lines[1][3], "0.80");
    assert!(lines[1][0].contains("->"));
}

#[test]
fn eval_flag_and_feature_errors() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a", "5", &[]);

    let r = boundseg(&["eval", "--corpus", s(&a), "--train-corpus", s(&a), "--test-corpus", s(&a)]);
    assert_eq!(code(&r), 1);
    let r = boundseg(&["eval", "--corpus", s(&a), "--alpha", "0.5", "--per-fold-alpha"]);
    assert_eq!(code(&r), 1);
    let r = boundseg(&["eval", "--corpus", s(&a), "--alpha", "1.5"]);
    assert_eq!(code(&r), 1);

    // plain token files carry no prosody
    let plain = dir.path().join("plain");
    fs::create_dir(&plain).unwrap();
    for i in 0..5 {
        fs::write(plain.join(format!("t{i}.txt")), "o gato dorme . ele come então . fim .\n").unwrap();
    }
    let mut args = vec!["eval", "--corpus", s(&plain), "--format", "tokens", "--features", "prosody"];
    args.extend_from_slice(SMALL);
    let r = boundseg(&args);
    assert_eq!(code(&r), 2, "{}", String::from_utf8_lossy(&r.stderr));
}
