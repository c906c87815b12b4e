use std::path::Path;
use std::process::{Command, Output};

fn inkgram(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inkgram")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = inkgram(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_recognize_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, model) = (dir.path().join("train"), dir.path().join("test"), dir.path().join("model"));
    ok(&["synth-corpus", "--out", s(&train), "--count", "150", "--noise", "0.03", "--seed", "1"]);
    let out = ok(&["synth-corpus", "--out", s(&test), "--count", "12", "--seed", "2"]);
    assert!(out.contains("wrote 12 items"));
    // fixed seed: identical corpus
    let again = dir.path().join("again");
    ok(&["synth-corpus", "--out", s(&again), "--count", "12", "--seed", "2"]);
    let first = std::fs::read_dir(&test).unwrap().next().unwrap().unwrap().path();
    let name = first.file_name().unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(again.join(name)).unwrap());

    let out = ok(&["train", "--corpus", s(&train), "--out", s(&model)]);
    assert!(out.contains("trained on 150 items"), "{out}");
    for f in ["grammar.txt", "templates.json", "profile.json", "relations.json", "bag.txt", "config.json"] {
        assert!(model.join(f).exists(), "{f}");
    }

    let out = ok(&["recognize", s(&first), "--model", s(&model), "--top", "3", "--json"]);
    let trees: serde_json::Value = serde_json::from_str(&out).unwrap();
    let trees = trees.as_array().unwrap();
    assert!(!trees.is_empty() && trees.len() <= 3);
    assert!(trees.windows(2).all(|w| w[0]["score"].as_f64() >= w[1]["score"].as_f64()));
    let out = ok(&["recognize", s(&first), "--model", s(&model), "--dump-forest"]);
    assert!(out.starts_with('#') && out.contains("or EXPR"), "{out}");

    let out = ok(&["evaluate", "--model", s(&model), "--corpus", s(&test), "--scenario", "perfect", "--json"]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    let classes = ["correct", "attainable", "incorrect"].map(|k| report[k].as_u64().unwrap());
    assert_eq!(classes.iter().sum::<u64>(), 12);
    assert_eq!(report["items"].as_array().unwrap().len(), 12);
    let out = ok(&["evaluate", "--model", s(&model), "--corpus", s(&test)]);
    assert!(out.starts_with("scenario default: 12 items"), "{out}");
}

#[test]
fn config_files_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.json");
    std::fs::write(&cfg, r#"{"count": 3, "seed": 9, "max_symbols": 2}"#).unwrap();
    let out = ok(&["synth-corpus", "--out", s(&dir.path().join("c")), "--config", s(&cfg)]);
    assert!(out.contains("wrote 3 items"), "{out}");
    // the builtin glyphs do not cover the toy grammar's letters
    let out = inkgram(&["synth-corpus", "--out", s(&dir.path().join("d")), "--grammar", "toy"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no glyph for terminals"));

    let out = inkgram(&["recognize", "missing.json", "--model", s(dir.path())]);
    assert!(!out.status.success());
    let out = inkgram(&["evaluate", "--model", "x", "--corpus", "y", "--scenario", "bogus"]);
    assert!(!out.status.success());
}
