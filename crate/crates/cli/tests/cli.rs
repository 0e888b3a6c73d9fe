use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gnn_dissect::concept::ConceptFormula;
use gnn_dissect::search::NeuronConceptMap;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnn-dissect"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn quick_config(dir: &Path) -> String {
    let path = dir.join("run.cfg");
    fs::write(
        &path,
        "dataset = synthetic-degree\nsynthetic_graphs = 16\nepochs = 4\ndepth = 2\n",
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn train_dissect_explain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = dir.path().join("out");
    let out_s = out.display().to_string();
    for cmd in ["train", "dissect", "explain"] {
        let o = run(&[cmd, "--config", &cfg, "--out", &out_s, "--seed", "4"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let log = fs::read_to_string(out.join("training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 5);
    let resolved = fs::read_to_string(out.join("resolved_config.txt")).unwrap();
    assert!(resolved.contains("seed = 4"));
    assert!(resolved.contains("epochs = 4"));
    let text = fs::read_to_string(out.join("concept_map.json")).unwrap();
    let map = NeuronConceptMap::from_json(&text).unwrap();
    assert_eq!(map.neurons.len(), 16);
    for e in map.neurons.iter().flat_map(|n| &n.entries) {
        assert_eq!(e.formula.to_string().parse::<ConceptFormula>().unwrap(), e.formula);
    }
    assert!(out.join("explanation_class1.json").exists());
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let a = dir.path().join("a").display().to_string();
    let b = dir.path().join("b").display().to_string();
    for out in [&a, &b] {
        assert!(run(&["train", "--config", &cfg, "--out", out]).status.success());
    }
    assert_eq!(
        fs::read(Path::new(&a).join("checkpoint.json")).unwrap(),
        fs::read(Path::new(&b).join("checkpoint.json")).unwrap()
    );
}

#[test]
fn missing_dataset_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere").display().to_string();
    let o = run(&["train", "--dataset", &missing, "--out", &dir.path().display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere"));
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "depths", "--dataset", "synthetic-degree"]).status.code(), Some(2));
    assert_eq!(run(&["train"]).status.code(), Some(2));
}

#[test]
fn layer_out_of_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = dir.path().join("out").display().to_string();
    assert!(run(&["train", "--config", &cfg, "--out", &out]).status.success());
    let o = run(&["dissect", "--config", &cfg, "--out", &out, "--layer", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["explain", "--config", &cfg, "--out", &out]);
    assert_eq!(o.status.code(), Some(2), "explain before dissect must fail");
    assert!(run(&["dissect", "--config", &cfg, "--out", &out]).status.success());
    let o = run(&["explain", "--config", &cfg, "--out", &out, "--class", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiments_write_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = dir.path().join("ep");
    let o = run(&[
        "experiment",
        "epochs",
        "--config",
        &cfg,
        "--out",
        &out.display().to_string(),
        "--epochs-list",
        "1,5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(out.join("epochs_1/checkpoint.json").exists());
    assert!(out.join("epochs_5/neuron_metrics.csv").exists());

    let out = dir.path().join("layers");
    let o = run(&["experiment", "layers", "--config", &cfg, "--out", &out.display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}
