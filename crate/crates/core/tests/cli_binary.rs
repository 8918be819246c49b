use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use behavior_bench::datamodel::{ClassLevel, ComboId};
use behavior_bench::learners::LearnerKind;
use behavior_bench::matrix::{write_index, FeatureSelection, IndexRow};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_behavior-bench")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["impute", "--input", p(&dir.path().join("nope.csv")), "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_2_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("run");
    for bad in ["boruta_alpha=1.5", "no_such_key=1", "folds"] {
        let out = run(&["reproduce", "--set", bad, "--out", p(&target)]);
        assert_eq!(code(&out), 2, "{bad}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!target.exists());
    }
    let cfg = dir.path().join("missing.conf");
    assert_eq!(code(&run(&["synth", "--config", p(&cfg), "--out", p(&dir.path().join("d.csv"))])), 4);
}

#[test]
fn stats_on_a_partial_index_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("index.csv");
    let row = IndexRow {
        combo: ComboId::A,
        env: true,
        feature_selection: FeatureSelection::None,
        learner: LearnerKind::Rf,
        class_level: ClassLevel::Two,
        accuracy: 0.7,
        sd_accuracy: 0.05,
        precision: 0.7,
        recall_sensitivity: 0.7,
        specificity: 0.7,
        f1: 0.7,
        auc: Some(0.75),
    };
    write_index(fs::File::create(&index).unwrap(), &[row]).unwrap();
    assert_eq!(code(&run(&["stats", "--index", p(&index)])), 3);
}

#[test]
fn standalone_subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let imputed = dir.path().join("imputed.csv");
    let out = run(&["synth", "--set", "seed=3", "--out", p(&data)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let before = fs::read(&data).unwrap();

    let out = run(&["impute", "--input", p(&data), "--out", p(&imputed)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&data).unwrap(), before, "inputs are never modified");
    assert!(imputed.with_extension("report.json").exists());

    let model = dir.path().join("rf.json");
    let out = run(&[
        "train", "--data", p(&imputed), "--combo", "c", "--classes", "3", "--learner", "RF", "--cv",
        "--set", "folds=3", "--set", "rf_trees=20", "--out", p(&model),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("3-fold accuracy"));
    assert!(model.exists());

    let out = run(&["train", "--data", p(&imputed), "--combo", "z", "--learner", "RF"]);
    assert_eq!(code(&out), 2);

    let ratings = dir.path().join("ratings.csv");
    fs::write(&ratings, "a,b\nx,x\ny,y\nx,y\ny,y\n").unwrap();
    let out = run(&["kappa", "--input", p(&ratings)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("kappa: 0.5000"));
}
