mod common;

use sagefin::cli::{self, RunConfig, EXPLANATIONS_DIR, MANIFEST_FILE, METRICS_JSON_FILE, METRICS_FILE, REPORT_FILE};
use sagefin::explain::Explanation;
use sagefin::train::{EpochRecord, EvalReport};

#[test]
fn default_pipeline_end_to_end() {
    let work = tempfile::tempdir().unwrap();
    let config = RunConfig {
        targets: Some("u:0,v:3".into()),
        ..RunConfig::default()
    };
    let config = common::run_pipeline(work.path(), config);
    let run = work.path().join("run");

    let report = std::fs::read_to_string(run.join(REPORT_FILE)).unwrap();
    let epochs: Vec<EpochRecord> = report.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(epochs.len(), config.train.epochs);
    assert!(epochs.iter().all(|e| e.loss.total.is_finite()));

    let metrics: EvalReport = serde_json::from_str(&std::fs::read_to_string(run.join(METRICS_JSON_FILE)).unwrap()).unwrap();
    assert!(metrics.u.f1 >= 0.9 && metrics.v.f1 >= 0.9 && metrics.edges.f1 >= 0.9, "{metrics:?}");
    let table = std::fs::read_to_string(run.join(METRICS_FILE)).unwrap();
    assert!(table.contains("sagefin"));

    for stem in ["u_0_top10", "v_3_top10"] {
        let dir = run.join(EXPLANATIONS_DIR);
        let dot = std::fs::read_to_string(dir.join(format!("{stem}.dot"))).unwrap();
        assert!(dot.starts_with(&format!("graph \"{stem}\"")));
        let json = std::fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap();
        let ex = Explanation::from_json(&json).unwrap();
        assert_eq!(ex.hops, 4);
        assert_eq!(ex.top_k, 10);
        assert_eq!(ex.file_stem(), stem);
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["command"], "explain");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config"]["explain"]["hops"], 4);
}

#[test]
fn default_explain_targets_the_top_wallets() {
    let work = tempfile::tempdir().unwrap();
    let mut config = RunConfig::default();
    config.train.epochs = 3;
    config.synthetic.n_u = 120;
    config.synthetic.n_v = 120;
    config.synthetic.communities = 15;
    common::run_pipeline(work.path(), config);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(work.path().join("run").join(MANIFEST_FILE)).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 10);
    assert!(outputs.iter().all(|o| o.as_str().unwrap().starts_with("explanations/v_")));
}

#[test]
fn odd_layer_count_fails_before_any_output() {
    let work = tempfile::tempdir().unwrap();
    let toml = work.path().join("run.toml");
    std::fs::write(&toml, "[model]\nlayers = 3\n").unwrap();
    let out = work.path().join("out");
    let code = cli::main_with_args([
        "sagefin",
        "generate",
        "--config",
        toml.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(!out.exists());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(cli::main_with_args(["sagefin", "train", "--learning-rate", "0.1"]), 2);
}

#[test]
fn missing_dataset_is_reported() {
    let work = tempfile::tempdir().unwrap();
    let code = cli::main_with_args([
        "sagefin",
        "train",
        "--data-dir",
        work.path().join("absent").to_str().unwrap(),
        "--out-dir",
        work.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn flags_reach_every_command() {
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("gen");
    let code = cli::main_with_args([
        "sagefin",
        "generate",
        "--seed",
        "17",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 17);
    assert_eq!(manifest["config"]["synthetic"]["seed"], 17);
    assert_eq!(manifest["config"]["model"]["seed"], 17);
}
