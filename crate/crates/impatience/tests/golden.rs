//! Byte-for-byte comparison against checked-in outputs.
//!
//! Set `IMPATIENCE_BLESS=1` to rewrite the fixtures after an intended change.

mod common;

use std::path::{Path, PathBuf};

use common::{assert_exit, impatience, stdout};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

fn compare(actual: &[u8], fixture: &str) {
    let path = fixtures().join(fixture);
    if std::env::var_os("IMPATIENCE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if expected != actual {
        panic!(
            "{fixture} differs from its golden copy\n--- expected\n{}\n--- actual\n{}",
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(actual)
        );
    }
}

#[test]
fn simulate_outputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let o = impatience(
        dir.path(),
        &[
            "simulate",
            "--seed",
            "7",
            "--lambda",
            "3",
            "--lambda",
            "9",
            "--replications",
            "2",
            "--horizon",
            "25",
            "--profile-reps",
            "10",
            "--feed",
            "markov",
            "--feed",
            "baseline",
        ],
    );
    assert_exit(&o, 0);
    let out = dir.path().join("out/simulate");
    for f in ["metrics.csv", "series.csv", "profile_markov.csv", "profile_baseline.csv"] {
        compare(&std::fs::read(out.join(f)).unwrap(), &format!("simulate/{f}"));
    }
}

#[test]
fn estimate_csv_matches() {
    let dir = tempfile::tempdir().unwrap();
    let o = impatience(
        dir.path(),
        &[
            "estimate", "--k", "6", "--mu", "1.5", "-T", "4", "--t0", "0.5", "--lambda-tar", "0.8", "--t", "0.7", "--k-j",
            "3", "--mu-j", "1.2", "--csv",
        ],
    );
    assert_exit(&o, 0);
    compare(stdout(&o).as_bytes(), "estimate.csv");
}

#[test]
fn training_losses_match() {
    let dir = tempfile::tempdir().unwrap();
    let o = impatience(
        dir.path(),
        &["train", "--seed", "11", "--episodes", "5", "--epochs", "30", "--hidden", "10,10"],
    );
    assert_exit(&o, 0);
    compare(&std::fs::read(dir.path().join("out/train/losses.csv")).unwrap(), "losses.csv");
}
