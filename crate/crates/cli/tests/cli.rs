use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dppred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dppred"))
        .args(args)
        .env_remove("DPPRED_THREADS")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, kind: &str) {
    let out = dppred(&["synth", "--kind", kind, "--out-dir", arg(dir), "--n-train", "1500", "--n-test", "500", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "medical");
    let data = dir.path().join("train.csv");
    let schema = dir.path().join("schema.txt");
    let cases: Vec<Vec<&str>> = vec![
        vec!["train", "--data", arg(&data), "--schema", arg(&schema), "--out", "m", "--k", "0"],
        vec!["train", "--data", arg(&data), "--schema", arg(&schema), "--out", "m", "--trees", "0"],
        vec!["sweep", "--data", arg(&data), "--schema", arg(&schema), "--param", "k", "--values", ""],
        vec!["sweep", "--data", arg(&data), "--schema", arg(&schema), "--param", "k", "--values", "3,x"],
        vec!["sweep", "--data", arg(&data), "--schema", arg(&schema), "--param", "depth", "--values", "3"],
        vec!["bogus"],
        vec!["train"],
    ];
    for c in cases {
        assert_eq!(dppred(&c).status.code(), Some(2), "{c:?}");
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "medical");
    let schema = dir.path().join("schema.txt");
    let missing = dir.path().join("missing.csv");
    let out = dppred(&["train", "--data", arg(&missing), "--schema", arg(&schema), "--out", "m"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let bad_model = dir.path().join("bad.txt");
    fs::write(&bad_model, "not a model\n").unwrap();
    let out = dppred(&["predict", "--model", arg(&bad_model), "--data", arg(&dir.path().join("test.csv"))]);
    assert_eq!(out.status.code(), Some(1));

    let out = dppred(&["train", "--data", arg(&dir.path().join("train.csv")), "--schema", arg(&schema), "--out", "m", "--task", "regression"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_predict_evaluate_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "medical");
    let model = dir.path().join("model.txt");
    let trace = dir.path().join("trace.csv");
    let out = dppred(&[
        "train",
        "--data",
        arg(&dir.path().join("train.csv")),
        "--schema",
        arg(&dir.path().join("schema.txt")),
        "--out",
        arg(&model),
        "--trace",
        arg(&trace),
        "--trees",
        "20",
        "--k",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("5 patterns selected"));
    assert!(stdout.contains("training accuracy: "));
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 6);

    let test = dir.path().join("test.csv");
    let preds = dppred(&["predict", "--model", arg(&model), "--data", arg(&test)]);
    assert!(preds.status.success());
    let text = String::from_utf8(preds.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("row_index,prediction,probability"));
    assert_eq!(text.lines().count(), 501);

    let eval = dppred(&["evaluate", "--model", arg(&model), "--data", arg(&test)]);
    let text = String::from_utf8(eval.stdout).unwrap();
    let acc: f64 = text.lines().nth(1).unwrap().strip_prefix("accuracy,").unwrap().parse().unwrap();
    assert!(acc > 0.9, "accuracy {acc}");
}

#[test]
fn stratified_round_trip_and_importance() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "subtyped");
    let model = dir.path().join("strat.txt");
    let out = dppred(&[
        "stratify-train",
        "--data",
        arg(&dir.path().join("train.csv")),
        "--schema",
        arg(&dir.path().join("schema.txt")),
        "--out",
        arg(&model),
        "--trees",
        "15",
        "--k-global",
        "5",
        "--k-local",
        "3",
        "--gibbs-iterations",
        "50",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("training rmse: "));

    let preds = dppred(&["stratify-predict", "--model", arg(&model), "--data", arg(&dir.path().join("test.csv"))]);
    let text = String::from_utf8(preds.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("row_index,prediction,cluster"));
    for line in text.lines().skip(1) {
        let cluster: usize = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(cluster < 3);
    }

    let imp = dppred(&["importance", "--model", arg(&model)]);
    let text = String::from_utf8(imp.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("variable,cluster,frequency"));
    assert!(text.lines().any(|l| l.contains(",global,")));
}

#[test]
fn sweep_emits_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "subtyped");
    let out = dppred(&[
        "sweep",
        "--data",
        arg(&dir.path().join("train.csv")),
        "--schema",
        arg(&dir.path().join("schema.txt")),
        "--test",
        arg(&dir.path().join("test.csv")),
        "--param",
        "trees",
        "--values",
        "5, 10,20",
        "--k",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "value,train_metric,test_metric");
    let values: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(values, ["5", "10", "20"]);
    for l in &lines[1..] {
        let test: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        // Labels span roughly 0..9; an RMSE on the original scale stays well under that.
        assert!(test.is_finite() && test > 0.0 && test < 3.0, "{l}");
    }
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "medical");
    let run = |threads: &str, name: &str| {
        let model = dir.path().join(name);
        let out = dppred(&[
            "--threads",
            threads,
            "train",
            "--data",
            arg(&dir.path().join("train.csv")),
            "--schema",
            arg(&dir.path().join("schema.txt")),
            "--out",
            arg(&model),
            "--trees",
            "15",
            "--k",
            "6",
            "--seed",
            "11",
        ]);
        assert!(out.status.success());
        (out.stdout, fs::read(model).unwrap())
    };
    assert_eq!(run("1", "a.txt"), run("4", "b.txt"));
}
