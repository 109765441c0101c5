use std::process::{Command, Output};

fn tomita(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomita")).args(args).output().unwrap()
}

#[test]
fn bad_inputs_fail_with_a_message() {
    for args in [
        &["metrics", "--grammar", "8"][..],
        &["train", "--grammar", "1", "--arch", "lstm", "--activation", "sigmoid", "--out", "x"],
        &["train", "--grammar", "1", "--arch", "perceptron", "--out", "x"],
        &["extract", "--checkpoint", "/nonexistent/model.ckpt", "--K", "3", "--out", "x"],
        &["experiment", "--grammar", "1", "--arch", "elman", "--K", "9-3", "--out", "x"],
    ] {
        let out = tomita(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed nothing");
    }
}

#[test]
fn metrics_to_stdout() {
    let out = tomita(&["metrics", "--grammar", "5", "--lengths", "8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "grammar,N,entropy,avg_edit_distance,prop2");
    assert_eq!(lines[1], "5,8,0.875000,1.000000,0.875000");
}

#[test]
fn extraction_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let model = format!("{d}/model");
    let out = tomita(&["train", "--grammar", "1", "--arch", "second_order", "--epochs", "5", "--out", &model]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(format!("{model}/history.csv")).unwrap().lines().count() > 1);
    let ext = format!("{d}/ext");
    let out = tomita(&["extract", "--checkpoint", &format!("{model}/model.ckpt"), "--K", "4", "--out", &ext]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["dfa.json", "dfa.dot", "record.json"] {
        assert!(std::path::Path::new(&ext).join(f).exists(), "{f}");
    }
}
