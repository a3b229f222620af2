//! Drives the `tweetnet` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic")
}

pub fn tweetnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tweetnet"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("spawn tweetnet")
}

/// Runs `args` and panics with the captured stderr unless it exits 0.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tweetnet(dir, args);
    assert!(
        out.status.success(),
        "tweetnet {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// preprocess, train keis_bigru, predict and evaluate on the bundled corpus
/// inside `dir`. Returns the prediction file and the macro-F1 of the report.
pub fn smoke_pipeline(dir: &Path, seed: &str) -> (Vec<u8>, f64) {
    let data = data_dir();
    let train = data.join("train.tsv");
    let emb = data.join("embeddings.txt");
    let (train, emb) = (train.to_str().unwrap(), emb.to_str().unwrap());
    ok(dir, &["preprocess", "--input", train, "--output", "clean.tsv"]);
    ok(
        dir,
        &[
            "train", "--train", "clean.tsv", "--val", "clean.tsv", "--embeddings", emb, "--model", "keis_bigru",
            "--checkpoint", "model.ckpt", "--history", "history.csv", "--max-len", "12", "--epochs", "100",
            "--patience", "200", "--seed", seed,
        ],
    );
    ok(dir, &["predict", "--checkpoint", "model.ckpt", "--input", train, "--output", "preds.tsv"]);
    ok(dir, &["evaluate", "--predictions", "preds.tsv", "--gold", train, "--report", "report"]);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap();
    (std::fs::read(dir.join("preds.tsv")).unwrap(), report["macro_f1"].as_f64().unwrap())
}
