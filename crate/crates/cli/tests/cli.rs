//! End-to-end tests driving the compiled binary over the shipped fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anchorex"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn assert_code(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn ingest_partitions_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["ingest", "--input"])
        .arg(fixture("posts10.jsonl"))
        .args(["--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_code(&output, 0);
    // Hand count on the shipped fixture: 3 official, 5 referencing, 2 neither.
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("official=3 public=5 dropped=2"), "stdout: {stdout}");
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["official"], 3);
    assert_eq!(stats["public"], 5);
    assert_eq!(stats["dropped"], 2);
    assert_eq!(stats["stats"]["total_posts"], 10);
    let official = fs::read_to_string(dir.path().join("official.jsonl")).unwrap();
    assert_eq!(official.lines().count(), 3);
    let public = fs::read_to_string(dir.path().join("public.jsonl")).unwrap();
    assert_eq!(public.lines().count(), 5);
}

#[test]
fn ingest_missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["ingest", "--input", "/nonexistent/posts.jsonl", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_code(&output, 1);
}

#[test]
fn ingest_empty_input_is_ok() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let output = bin()
        .args(["ingest", "--input"])
        .arg(&empty)
        .args(["--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_code(&output, 0);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("warning"), "stderr: {stderr}");
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["stats"]["total_posts"], 0);
}

#[test]
fn stats_reports_power_law() {
    let output = bin()
        .args(["stats", "--input"])
        .arg(fixture("posts10.jsonl"))
        .output()
        .unwrap();
    assert_code(&output, 0);
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["stats"]["total_posts"], 10);
    assert_eq!(report["stats"]["unique_users"], 10);
}

fn run_pipeline(out_dir: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--official"])
        .arg(fixture("planted_official.jsonl"))
        .args(["--public"])
        .arg(fixture("planted_public.jsonl"))
        .args(["--seeds"])
        .arg(fixture("planted_seeds.txt"))
        .args([
            "--topics",
            "2",
            "--iters",
            "10",
            "--top-k",
            "3",
            "--rng-seed",
            "7",
            "--official-min-df",
            "1",
            "--public-min-df",
            "1",
        ])
        .args(extra)
        .args(["--out-dir"])
        .arg(out_dir)
        .output()
        .unwrap()
}

#[test]
fn run_writes_all_artifacts_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let output = run_pipeline(dir.path(), &[]);
    let elapsed = start.elapsed();
    assert_code(&output, 0);
    assert!(elapsed.as_secs_f64() < 5.0, "run took {elapsed:?}");
    for name in [
        "official_model.bin",
        "public_model.bin",
        "official_vocab.txt",
        "public_vocab.txt",
        "official_labels.csv",
        "public_labels.csv",
        "extracted_seeds.txt",
        "timelines.csv",
        "timelines_normalized.csv",
        "heatmap.csv",
        "heatmap.svg",
        "timeline_topic_00.svg",
        "timeline_topic_01.svg",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["n_topics"], 2);
    assert_eq!(manifest["config"]["n_iter"], 10);
    let labels = fs::read_to_string(dir.path().join("public_labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 61); // header + 60 docs
}

#[test]
fn run_is_reproducible_byte_for_byte() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    assert_code(&run_pipeline(dir_a.path(), &[]), 0);
    assert_code(&run_pipeline(dir_b.path(), &[]), 0);
    for name in [
        "official_model.bin",
        "public_model.bin",
        "extracted_seeds.txt",
        "official_labels.csv",
        "public_labels.csv",
        "timelines.csv",
        "heatmap.csv",
        "heatmap.svg",
        "manifest.json",
    ] {
        let a = fs::read(dir_a.path().join(name)).unwrap();
        let b = fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn run_missing_seeds_exits_2_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["run", "--official"])
        .arg(fixture("planted_official.jsonl"))
        .args(["--public"])
        .arg(fixture("planted_public.jsonl"))
        .args(["--seeds", "/nonexistent/seeds.txt", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_code(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/nonexistent/seeds.txt"), "stderr: {stderr}");
}

#[test]
fn run_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "n_topics = 3\nn_iter = 5\nrng_seed = 7\n").unwrap();
    let out = dir.path().join("out");
    let output = bin()
        .args(["run", "--official"])
        .arg(fixture("planted_official.jsonl"))
        .args(["--public"])
        .arg(fixture("planted_public.jsonl"))
        .args(["--seeds"])
        .arg(fixture("planted_seeds.txt"))
        .args(["--config"])
        .arg(&config)
        .args(["--topics", "2", "--official-min-df", "1", "--public-min-df", "1", "--out-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert_code(&output, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    // The flag overrides the config file; n_iter comes from the file.
    assert_eq!(manifest["config"]["n_topics"], 2);
    assert_eq!(manifest["config"]["n_iter"], 5);
}

#[test]
fn run_rejects_unknown_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "not_a_key = 1\n").unwrap();
    let output = bin()
        .args(["run", "--official"])
        .arg(fixture("planted_official.jsonl"))
        .args(["--public"])
        .arg(fixture("planted_public.jsonl"))
        .args(["--config"])
        .arg(&config)
        .args(["--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_code(&output, 2);
}

#[test]
fn label_timeline_similarity_report_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_pipeline(dir.path(), &[]), 0);

    // Relabel the public corpus with the saved public model.
    let labels_out = dir.path().join("relabel.csv");
    let output = bin()
        .args(["label", "--model"])
        .arg(dir.path().join("public_model.bin"))
        .args(["--vocab"])
        .arg(dir.path().join("public_vocab.txt"))
        .args(["--input"])
        .arg(fixture("planted_public.jsonl"))
        .args(["--out"])
        .arg(&labels_out)
        .output()
        .unwrap();
    assert_code(&output, 0);
    let relabeled = fs::read_to_string(&labels_out).unwrap();
    let original = fs::read_to_string(dir.path().join("public_labels.csv")).unwrap();
    assert_eq!(relabeled, original, "relabeling with the saved model diverged");

    // Timeline for topic 0 of the public corpus.
    let tl_dir = dir.path().join("tl");
    let output = bin()
        .args(["timeline", "--docs"])
        .arg(fixture("planted_public.jsonl"))
        .args(["--labels"])
        .arg(&labels_out)
        .args(["--topic", "0", "--source", "public", "--normalized", "--out-dir"])
        .arg(&tl_dir)
        .output()
        .unwrap();
    assert_code(&output, 0);
    assert!(tl_dir.join("timeline_topic_00_public.csv").exists());
    assert!(tl_dir.join("timeline_topic_00_public.svg").exists());

    // Standalone similarity between the two labeled corpora.
    let sim_dir = dir.path().join("sim");
    let output = bin()
        .args(["similarity", "--official-docs"])
        .arg(fixture("planted_official.jsonl"))
        .args(["--official-labels"])
        .arg(dir.path().join("official_labels.csv"))
        .args(["--public-docs"])
        .arg(fixture("planted_public.jsonl"))
        .args(["--public-labels"])
        .arg(dir.path().join("public_labels.csv"))
        .args(["--topics", "2", "--out-dir"])
        .arg(&sim_dir)
        .output()
        .unwrap();
    assert_code(&output, 0);
    assert!(sim_dir.join("heatmap.csv").exists());
    assert!(sim_dir.join("heatmap.svg").exists());

    // Report renders the manifest.
    let output = bin()
        .args(["report", "--manifest"])
        .arg(dir.path().join("manifest.json"))
        .output()
        .unwrap();
    assert_code(&output, 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("topics 2"), "stdout: {stdout}");
    assert!(stdout.contains("extracted keywords"), "stdout: {stdout}");
}

#[test]
fn csv_input_format_is_supported() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("posts.csv");
    fs::write(
        &csv,
        "id,date,username,tweet,mentions\n\
         1,2020-03-10 09:00:00,HealthZA,\"update, with comma\",\n\
         2,2020-03-11 09:00:00,person,hello @HealthZA,healthza\n",
    )
    .unwrap();
    let output = bin()
        .args(["ingest", "--input"])
        .arg(&csv)
        .args(["--format", "csv", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_code(&output, 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("official=1 public=1 dropped=0"), "stdout: {stdout}");
}
