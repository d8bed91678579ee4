use std::io::Write;

use dppred::data::{load_csv, minmax_normalize_labels, split_train_test, RawTable, Schema, SplitRatio};
use dppred::model::{evaluate_model, predict, train};
use dppred::{DppredModel, Error, HyperParams};

const SCHEMA: &str = "\
label_task,class
age,numeric
color,categorical,red|green|blue
score,numeric
y,label
";

/// Label is 1 exactly when color is red and score >= 0.5.
fn write_csv(n: usize, with_gaps: bool) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "age,color,score,y").unwrap();
    let colors = ["red", "green", "blue"];
    for i in 0..n {
        let color = colors[i % 3];
        let score = ((i * 37) % 100) as f64 / 100.0;
        let y = (color == "red" && score >= 0.5) as u8;
        let age = if with_gaps && i % 50 == 7 { "?".to_string() } else { (20 + i % 40).to_string() };
        let color = if with_gaps && i % 61 == 3 { "" } else { color };
        writeln!(f, "{age},{color},{score},{y}").unwrap();
    }
    f.flush().unwrap();
    f
}

fn small_hp() -> HyperParams {
    let mut hp = HyperParams::classification();
    hp.tree.n_trees = 20;
    hp.k = 5;
    hp
}

#[test]
fn csv_to_saved_model_and_back() {
    let schema = Schema::parse(SCHEMA).unwrap();
    let csv = write_csv(600, true);
    let ds = load_csv(csv.path(), &schema).unwrap();
    // Two numerics plus three categories and a missing flag.
    assert_eq!(ds.d, 6);

    let model = train(&ds, &small_hp()).unwrap();
    assert!(evaluate_model(&model, &ds).unwrap().primary() > 0.97);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    model.save(&path).unwrap();
    let loaded = DppredModel::load(&path).unwrap();
    assert_eq!(loaded, model);

    // Unlabeled rows go through the stored encoding.
    let mut unlabeled = tempfile::NamedTempFile::new().unwrap();
    writeln!(unlabeled, "age,color,score\n30,red,0.9\n30,blue,0.9\n,purple,0.1").unwrap();
    let raw = RawTable::from_path(unlabeled.path()).unwrap();
    let enc = loaded.encode(&raw).unwrap();
    let preds = predict(&loaded, &enc).unwrap();
    assert_eq!(preds.iter().map(|p| p.value).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
}

#[test]
fn model_rejects_foreign_columns() {
    let schema = Schema::parse(SCHEMA).unwrap();
    let csv = write_csv(300, false);
    let model = train(&load_csv(csv.path(), &schema).unwrap(), &small_hp()).unwrap();
    let mut other = tempfile::NamedTempFile::new().unwrap();
    writeln!(other, "age,shade,score\n30,red,0.9").unwrap();
    let raw = RawTable::from_path(other.path()).unwrap();
    assert!(model.encode(&raw).is_err());
}

#[test]
fn regression_predictions_return_to_the_original_scale() {
    let schema = Schema::parse("label_task,real\nx,numeric\ny,label\n").unwrap();
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "x,y").unwrap();
    for i in 0..400 {
        // A gap around the step lets any sampled threshold inside it separate cleanly.
        let x = if i % 2 == 0 { 0.4 * i as f64 / 400.0 } else { 0.6 + 0.4 * i as f64 / 400.0 };
        writeln!(f, "{x},{}", if x >= 0.5 { 1000.0 } else { 200.0 }).unwrap();
    }
    f.flush().unwrap();
    let ds = minmax_normalize_labels(&load_csv(f.path(), &schema).unwrap()).unwrap();
    assert_eq!(ds.label_bounds, Some((200.0, 1000.0)));
    let (tr, te) = split_train_test(&ds, SplitRatio::two_thirds(), 1).unwrap();
    let mut hp = HyperParams::regression();
    hp.tree.n_trees = 10;
    hp.k = 3;
    let model = train(&tr, &hp).unwrap();
    let rmse = evaluate_model(&model, &te).unwrap().primary();
    assert!(rmse < 20.0, "rmse {rmse}");
    for p in predict(&model, &te).unwrap() {
        assert!((150.0..1050.0).contains(&p.value), "{}", p.value);
    }
}

#[test]
fn pure_labels_yield_no_patterns() {
    let schema = Schema::parse("label_task,class\nx,numeric\ny,label\n").unwrap();
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "x,y").unwrap();
    for i in 0..50 {
        writeln!(f, "{i},1").unwrap();
    }
    f.flush().unwrap();
    let ds = load_csv(f.path(), &schema).unwrap();
    // Every tree stays a single leaf.
    let err = train(&ds, &small_hp()).unwrap_err();
    assert!(matches!(err, Error::NoPatterns), "{err:?}");
}
