use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patchnoise")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn mce_of_self_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let errs = dir.path().join("errors.csv");
    fs::write(&errs, "kind,severity,error\nbrightness,1,0.2\nbrightness,2,0.3\nshot_noise,1,0.5\n").unwrap();
    let stdout = ok(&["mce", "--input", p(&errs), "--baseline", p(&errs), "--exclude-noise"]);
    assert!(stdout.lines().any(|l| l == "mCE 1.000"), "{stdout}");
    assert!(stdout.lines().any(|l| l == "mCE(-noise) 1.000"), "{stdout}");
}

#[test]
fn select_with_wide_resnet_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cands = dir.path().join("cands.csv");
    // Hand application at Z = 96.5%: a and c pass the gate with
    // robustness -0.05 and -0.03; b is more robust but fails the gate.
    fs::write(
        &cands,
        "label,clean_acc,acc_0.1,acc_0.2,acc_0.3,acc_0.5,acc_0.8,acc_1.0\n\
         a,0.97,0.92,0.92,0.92,0.92,0.92,0.92\n\
         b,0.96,0.94,0.94,0.94,0.94,0.94,0.94\n\
         c,0.966,0.936,0.936,0.936,0.936,0.936,0.936\n",
    )
    .unwrap();
    let stdout = ok(&["select", "--input", p(&cands), "--z", "96.5%"]);
    assert_eq!(stdout.lines().next(), Some("selected c"));
    let stdout = ok(&["select", "--input", p(&cands), "--z", "0.99"]);
    assert_eq!(stdout.lines().next(), Some("selected a"));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("seed = 5\nn = 6\noutput = {}\n", p(&data))).unwrap();
    ok(&["synth", "--config", p(&cfg)]);
    assert!(data.join("000005.imgt").exists());
    assert!(!data.join("000006.imgt").exists());
}

#[test]
fn failure_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth");
    ok(&["synth", "--n", "4", "--output", p(&data)]);
    let out_dir = dir.path().join("aug");
    let out = run(&["augment", "--input", p(&data), "--output", p(&out_dir), "--kind", "patch_gaussian"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(!out_dir.exists());
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 1, "{names:?}");
}

#[test]
fn train_predict_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth");
    let model = dir.path().join("model.toym");
    let preds = dir.path().join("preds.txt");
    ok(&["synth", "--n", "64", "--seed", "3", "--output", p(&data)]);
    ok(&["train", "--input", p(&data), "--output", p(&model), "--epochs", "3", "--filters", "8"]);
    ok(&["predict", "--model", p(&model), "--input", p(&data), "--output", p(&preds)]);
    let report = ok(&["eval", "--input", p(&data), "--predictions", p(&preds), "--sigma-predictions", &format!("0.5={}", p(&preds))]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(v["clean_accuracy"].as_f64().unwrap() > 0.5);
    assert_eq!(v["sigma_accuracy"]["0.5"], v["clean_accuracy"]);
}

#[test]
fn corrupt_suite_layout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth");
    let suite = dir.path().join("suite");
    ok(&["synth", "--n", "4", "--output", p(&data)]);
    ok(&["corrupt", "--input", p(&data), "--output", p(&suite)]);
    for s in ["0.1", "0.2", "0.3", "0.5", "0.8", "1"] {
        assert!(suite.join(format!("sigma_{s}")).join("labels.txt").exists(), "sigma {s}");
    }
}
