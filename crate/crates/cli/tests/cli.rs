use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pulsenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulsenet")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn gen_small(out: &Path) -> Output {
    pulsenet(&[
        "gen",
        "--classes",
        "3",
        "--per-class",
        "8",
        "--nmin",
        "100",
        "--nmax",
        "300",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ])
}

const TINY: &[&str] = &[
    "--depth",
    "22",
    "--width",
    "2",
    "--input-len",
    "128",
    "--epochs",
    "2",
    "--patience",
    "1",
    "--batch-size",
    "8",
    "--eval-repeats",
    "2",
];

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |p: &Path| {
        vec!["gen", "--classes", "17", "--per-class", "20", "--seed", "1", "--out"]
            .into_iter()
            .map(String::from)
            .chain([p.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    for p in [&a, &b] {
        let args = args(p);
        let o = pulsenet(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["manifest.json", "train.bin", "test.bin"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = read_json(&a.join("manifest.json"));
    assert_eq!(m["snr_range_db"], serde_json::json!([-12.0, 12.0]));
    assert_eq!(m["provenance"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn gen_without_out_is_a_usage_error() {
    let o = pulsenet(&["gen", "--classes", "4"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--out"));
}

#[test]
fn invalid_ranges_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = pulsenet(&["gen", "--snr-lo", "5", "--snr-hi", "-5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = pulsenet(&["gen", "--nmin", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn eval_of_a_missing_checkpoint_fails_at_runtime() {
    let o = pulsenet(&["eval", "--ckpt", "missing.bin", "--data", "nowhere"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("checkpoint not found"));
}

#[test]
fn train_writes_reproducible_artifacts_and_eval_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(code(&gen_small(&data)), 0);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["train", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(TINY);
        let o = pulsenet(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["ckpt.bin", "history.json", "report.json", "outcomes.csv", "scatter.json", "run_config.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("timing.json").is_file());
    let report = read_json(&a.join("report.json"));
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["run_config"]["model"]["depth"], 22);
    assert_eq!(report["run_config"]["model"]["num_classes"], 3);
    let csv = std::fs::read_to_string(a.join("outcomes.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# pulsenet "));
    assert_eq!(lines.next().unwrap(), "pulse_width,snr_db,correct");

    let rep = dir.path().join("eval.json");
    let o = pulsenet(&[
        "eval",
        "--ckpt",
        a.join("ckpt.bin").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--repeats",
        "2",
        "--report",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // Same seed and repeats as the training run's own evaluation.
    assert_eq!(read_json(&rep)["report"], report["report"]);
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(code(&gen_small(&data)), 0);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"model": {"depth": 26, "base_width": 3}, "train": {"learning_rate": 0.01}}"#).unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["train", "--config", cfg.to_str().unwrap(), "--data", data.to_str().unwrap()];
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    args.extend_from_slice(&TINY[2..]);
    let o = pulsenet(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rc = read_json(&out.join("run_config.json"));
    assert_eq!(rc["model"]["depth"], 26);
    assert_eq!(rc["model"]["base_width"], 2);
    assert_eq!(rc["train"]["learning_rate"], 0.01);
    assert_eq!(rc["train"]["batch_size"], 8);
    assert_eq!(rc["model"]["first_kernel"], 9);

    std::fs::write(&cfg, r#"{"train": {"batch": 4}}"#).unwrap();
    let o = pulsenet(&["train", "--config", cfg.to_str().unwrap(), "--data", data.to_str().unwrap(), "--out", "x"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("train.batch"));
}

#[test]
fn summary_matches_the_library_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cresnet30.json");
    std::fs::write(&cfg, r#"{"arithmetic": "complex", "depth": 30, "base_width": 8}"#).unwrap();
    let o = pulsenet(&["summary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let model = pulsenet::resnet::Model::<f32>::build(&pulsenet::resnet::ModelConfig::default(), 0).unwrap();
    assert!(text.contains(&format!("total parameters: {}", model.count_parameters())), "{text}");
    assert!(text.contains("stage4.block3.conv2"));

    let o = pulsenet(&["summary", "--depth", "31"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("supported depths"));
}

#[test]
fn gradcheck_double_passes() {
    let o = pulsenet(&["gradcheck", "--precision", "double", "--trials", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 11);
}

#[test]
fn sweep_and_multipulse_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(code(&gen_small(&data)), 0);
    let out = dir.path().join("sweep");
    let mut args = vec!["sweep-d", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(&["--d-values", "64,128"]);
    args.extend_from_slice(&TINY[..4]);
    args.extend_from_slice(&TINY[6..]);
    let o = pulsenet(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("sweep_d.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "D,test_error,best_epoch,parameters,error");
    assert!(rows[1].starts_with("64,") && rows[2].starts_with("128,"));

    let out = dir.path().join("mp");
    let mut args = vec!["multipulse", "--out", out.to_str().unwrap(), "--classes", "5", "--l-values", "1,2"];
    args.extend_from_slice(&["--train-scenes", "32", "--test-scenes", "16", "--eval-scenes", "16"]);
    args.extend_from_slice(TINY);
    let o = pulsenet(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("multipulse.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "L,e_abs,e_sub,k_eabs");
    assert_eq!(rows.len(), 3);
    let rc = read_json(&out.join("run_config.json"));
    assert_eq!(rc["model"]["head"], "sigmoid-bce");
}
