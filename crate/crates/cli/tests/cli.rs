use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gravrank::models::Checkpoint;

fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

fn gravrank(dir: &Path, args: &[&str]) -> Output {
    let data = format!("data={}", sample_dir().display());
    Command::new(env!("CARGO_BIN_EXE_gravrank"))
        .current_dir(dir)
        .arg(args[0])
        .arg(data)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn train_writes_checkpoint_and_full_trace() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&gravrank(tmp.path(), &["train"]));
    let ck = Checkpoint::load(&tmp.path().join("out/model.ckpt")).unwrap();
    assert_eq!(ck.trace.len(), 300);
    assert_eq!(ck.params.blocks().len(), 2);
    let trace = std::fs::read_to_string(tmp.path().join("out/trace.tsv")).unwrap();
    assert!(trace.starts_with("# config_hash="));
    assert_eq!(trace.lines().count(), 302);
}

#[test]
fn variational_checkpoint_has_four_weight_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&gravrank(tmp.path(), &["train", "model=gravity_vae", "epochs=20"]));
    let ck = Checkpoint::load(&tmp.path().join("out/model.ckpt")).unwrap();
    assert_eq!(ck.params.blocks().len(), 4);
    assert_eq!(ck.trace.kl.len(), 20);
}

#[test]
fn missing_feature_file_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gravrank(tmp.path(), &["train", "features=no_such_features.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_features.tsv"));
}

#[test]
fn unknown_key_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gravrank(tmp.path(), &["train", "--epoch", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epoch"));
}

#[test]
fn deterministic_baseline_has_zero_spread() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&gravrank(tmp.path(), &["eval", "baseline=popularity", "runs=3"]));
    let r = report(&tmp.path().join("out/report.json"));
    let cells = r["report"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3);
    for c in cells {
        for m in ["recall", "map", "ndcg"] {
            assert_eq!(c[m]["std"].as_f64(), Some(0.0));
        }
    }
    assert_eq!(r["seeds"].as_array().unwrap().len(), 3);
}

#[test]
fn ks_option_restricts_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&gravrank(tmp.path(), &["eval", "baseline=knn", "--Ks", "20"]));
    let r = report(&tmp.path().join("out/report.json"));
    assert_eq!(r["report"]["ks"], serde_json::json!([20]));
    assert_eq!(r["report"]["cells"].as_array().unwrap().len(), 1);
}

#[test]
fn stored_and_in_process_training_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&gravrank(dir, &["train", "epochs=50", "out=a"]));
    ok(&gravrank(dir, &["eval", "checkpoint=a/model.ckpt", "out=a"]));
    ok(&gravrank(dir, &["eval", "epochs=50", "out=b"]));
    ok(&gravrank(dir, &["sweep-lambda", "epochs=50", "lambdas=5", "out=c"]));
    let a = report(&dir.join("a/report.json"));
    let b = report(&dir.join("b/report.json"));
    let c = report(&dir.join("c/lambda_5/report.json"));
    assert_eq!(a["report"], b["report"]);
    assert_eq!(a["report"], c["report"]);
    let ranked = |p: &str| {
        let text = std::fs::read_to_string(dir.join(p)).unwrap();
        text.lines().skip(1).map(String::from).collect::<Vec<_>>()
    };
    assert_eq!(ranked("a/ranked.tsv"), ranked("b/ranked.tsv"));
    assert!(dir.join("c/sweep.tsv").exists() && dir.join("c/lambda_5/profile.tsv").exists());
}

#[test]
fn reruns_are_bit_identical() {
    // same relative out dir so the config hashes agree
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        ok(&gravrank(d.path(), &["eval", "model=gravity_vae", "epochs=30", "runs=2"]));
        ok(&gravrank(d.path(), &["train", "model=gravity_vae", "epochs=30"]));
    }
    for f in ["report.json", "ranked.tsv", "profile.tsv", "model.ckpt", "trace.tsv", "config.txt"] {
        let read = |i: usize| std::fs::read(dirs[i].path().join("out").join(f)).unwrap();
        assert_eq!(read(0), read(1), "{f}");
    }
}

#[test]
fn changed_split_is_refused_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let split = dir.join("split.tsv");
    std::fs::copy(sample_dir().join("split.tsv"), &split).unwrap();
    let split_arg = format!("split={}", split.display());
    ok(&gravrank(dir, &["train", "epochs=10", &split_arg]));

    let text = std::fs::read_to_string(&split).unwrap();
    std::fs::write(&split, format!("# edited\n{text}")).unwrap();
    let out = gravrank(dir, &["eval", "checkpoint=out/model.ckpt", &split_arg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    ok(&gravrank(dir, &["eval", "checkpoint=out/model.ckpt", &split_arg, "--force"]));
}

#[test]
fn mass_analysis_on_sample_data() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&gravrank(dir, &["train", "epochs=30"]));
    ok(&gravrank(dir, &["analyze-masses", "checkpoint=out/model.ckpt"]));
    let text = std::fs::read_to_string(dir.join("out/correlations.tsv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        for v in row.split('\t').skip(2) {
            let v: f64 = v.parse().unwrap();
            assert!((-1.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn fixed_in_degree_masses_correlate_perfectly_with_in_degree() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&gravrank(dir, &["train", "epochs=10", "fixed_mass=in_degree"]));
    ok(&gravrank(dir, &["analyze-masses", "checkpoint=out/model.ckpt"]));
    let text = std::fs::read_to_string(dir.join("out/correlations.tsv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("in_degree\t")).unwrap();
    let pearson: f64 = row.split('\t').nth(2).unwrap().parse().unwrap();
    assert!((pearson - 1.0).abs() < 1e-12, "{pearson}");
}

#[test]
fn mass_analysis_needs_a_gravity_model() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&gravrank(tmp.path(), &["train", "epochs=5", "model=standard_ae"]));
    let out = gravrank(tmp.path(), &["analyze-masses", "checkpoint=out/model.ckpt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("masses"));
}

#[test]
fn projection_and_export_cover_every_node() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&gravrank(dir, &["train", "epochs=10", "dim=4"]));
    ok(&gravrank(dir, &["project", "checkpoint=out/model.ckpt"]));
    ok(&gravrank(dir, &["export-embedding", "checkpoint=out/model.ckpt"]));
    ok(&gravrank(dir, &["rank", "checkpoint=out/model.ckpt", "ks=10"]));
    let cold = std::fs::read_to_string(dir.join("out/cold_embedding.tsv")).unwrap();
    assert_eq!(cold.lines().count(), 1 + 40);
    let all = std::fs::read_to_string(dir.join("out/embedding.tsv")).unwrap();
    assert_eq!(all.lines().count(), 1 + 200);
    // id, part, 4 positions and one mass
    assert!(all.lines().skip(1).all(|l| l.split('\t').count() == 7));
    let ranked = std::fs::read_to_string(dir.join("out/ranked.tsv")).unwrap();
    assert_eq!(ranked.lines().count(), 1 + 20 * 10);
}

#[test]
fn ingest_and_split_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&gravrank(dir, &["ingest"]));
    let summary = report(&dir.join("out/ingest.json"));
    assert_eq!(summary["nodes"], 200);
    assert_eq!(summary["edges"], 1000);
    let ids = std::fs::read_to_string(dir.join("out/ids.tsv")).unwrap();
    assert_eq!(ids.lines().count(), 201);

    let split = dir.join("s.tsv");
    ok(&gravrank(dir, &["split", &format!("split={}", split.display()), "ratios=0.5,0.25,0.25", "seed=3"]));
    let text = std::fs::read_to_string(&split).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("\ttrain")).count(), 100);
}

#[test]
fn make_sample_reproduces_the_bundled_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gravrank"))
        .current_dir(tmp.path())
        .args(["make-sample", "out=s"])
        .output()
        .unwrap();
    ok(&out);
    for f in ["nodes.tsv", "edges.tsv", "features.tsv", "split.tsv"] {
        assert_eq!(
            std::fs::read(tmp.path().join("s").join(f)).unwrap(),
            std::fs::read(sample_dir().join(f)).unwrap(),
            "{f}"
        );
    }
}
