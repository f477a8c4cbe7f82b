use std::path::Path;
use std::process::Command;

fn primparse(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_primparse"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "primparse {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn export_train_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let exported = primparse(&["export", "--out", data.to_str().unwrap()]);
    assert_eq!(exported.lines().count(), 5);
    assert!(data.join("toy_kb/questions.jsonl").is_file());

    let config = tmp.path().join("toy_kb.json");
    std::fs::write(
        &config,
        r#"{
  "modality": "kb",
  "data": {
    "questions": "data/toy_kb/questions.jsonl",
    "kb_triples": "data/toy_kb/triples.tsv",
    "kb_names": "data/toy_kb/names.tsv"
  },
  "run_dir": "run",
  "seed": 3
}"#,
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    assert!(primparse(&["train", "--config", cfg]).contains("ranker examples"));
    assert!(primparse(&["infer", "--config", cfg]).contains("predictions"));
    let eval = primparse(&["eval", "--config", cfg, "--seed", "3"]);
    assert!(eval.contains("EM"), "{eval}");
    assert!(Path::new(&tmp.path().join("run")).is_dir());
}

#[test]
fn unknown_config_is_an_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_primparse"))
        .args(["eval", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json"));
}
