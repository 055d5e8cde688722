use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relangle(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relangle"))
        .args(args)
        .current_dir(dir)
        .env_remove("RELANGLE_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = relangle(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

const SMALL: [&str; 4] = ["--width", "48", "--height", "32"];

fn pipeline(dir: &Path) {
    let mut synth = vec!["synth", "--seed", "7", "--out", "data", "--count", "2"];
    synth.extend(SMALL);
    ok(dir, &synth);
    ok(
        dir,
        &[
            "normalize",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "norm/surface_000.xyz",
            "--rotate-seed",
            "3",
        ],
    );
    ok(
        dir,
        &[
            "subdivide",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "subsets",
            "--subset-size",
            "1024",
        ],
    );
    ok(
        dir,
        &["features", "--input", "subsets", "--out", "features"],
    );
    ok(
        dir,
        &[
            "entropy",
            "--input",
            "data",
            "--out",
            "reports",
            "--subset-size",
            "1024",
        ],
    );
    ok(
        dir,
        &[
            "storage",
            "--input",
            "features/subset_0000.xyz",
            "--out",
            "storage",
        ],
    );
    ok(
        dir,
        &[
            "segment",
            "--input",
            "data/surface_001.xyz",
            "--out",
            "seg/surface_001.xyz",
            "--sweep",
            "45",
            "--smooth",
            "6",
        ],
    );
    ok(
        dir,
        &[
            "score", "--pred", "seg", "--truth", "data", "--out", "score",
        ],
    );
    ok(
        dir,
        &[
            "export-colored",
            "--input",
            "features/subset_0001.xyz",
            "--out",
            "colored.ply",
        ],
    );
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["synth", "--seed", "7", "--out", "a"];
    args.extend(SMALL);
    ok(tmp.path(), &args);
    args[4] = "b";
    ok(tmp.path(), &args);
    let a = snapshot(&tmp.path().join("a"));
    assert!(!a.is_empty());
    assert_eq!(a, snapshot(&tmp.path().join("b")));
}

#[test]
fn full_pipeline_is_reproducible() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    pipeline(first.path());
    pipeline(second.path());
    let a = snapshot(first.path());
    for name in [
        "reports/entropy.csv",
        "reports/entropy.json",
        "reports/entropy.txt",
        "storage/storage.csv",
        "score/score.json",
        "colored.ply",
        "subsets/plan.json",
    ] {
        assert!(a.contains_key(name), "missing {name}");
    }
    assert_eq!(a, snapshot(second.path()));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut synth = vec!["synth", "--seed", "2", "--out", "data"];
    synth.extend(SMALL);
    ok(tmp.path(), &synth);
    ok(
        tmp.path(),
        &[
            "--threads",
            "1",
            "features",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "one.xyz",
        ],
    );
    let out = Command::new(env!("CARGO_BIN_EXE_relangle"))
        .args([
            "features",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "env.xyz",
        ])
        .current_dir(tmp.path())
        .env("RELANGLE_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    ok(
        tmp.path(),
        &[
            "features",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "all.xyz",
        ],
    );
    let one = fs::read(tmp.path().join("one.xyz")).unwrap();
    assert_eq!(one, fs::read(tmp.path().join("env.xyz")).unwrap());
    assert_eq!(one, fs::read(tmp.path().join("all.xyz")).unwrap());
}

#[test]
fn entropy_report_orders_damaged_above_undamaged() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["synth", "--seed", "5", "--out", "data"]);
    ok(
        tmp.path(),
        &[
            "entropy", "--input", "data", "--out", "rep", "--norm", "global",
        ],
    );
    let rows: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("rep/entropy.json")).unwrap()).unwrap();
    let rows = rows["rows"].as_array().expect("rows array");
    let mean = |section: &str| {
        rows.iter()
            .find(|r| r["feature"] == "relative-angle" && r["section"] == section)
            .and_then(|r| r["mean"].as_f64())
            .unwrap()
    };
    assert!(mean("damaged") > mean("undamaged"));
    assert!(rows.iter().all(|r| r["normalization"] == "global"));
}

#[test]
fn storage_report_has_six_rows() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["synth", "--seed", "9", "--out", "data"]);
    ok(
        tmp.path(),
        &[
            "subdivide",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "sub",
        ],
    );
    let table = ok(
        tmp.path(),
        &["storage", "--input", "sub/subset_0003.xyz", "--out", "st"],
    );
    let csv = fs::read_to_string(tmp.path().join("st/storage.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let combo3: Vec<&str> = csv.lines().nth(3).unwrap().split(',').collect();
    let ratio: f64 = combo3[3].parse().unwrap();
    assert!((0.69..=0.76).contains(&ratio), "ratio {ratio}\n{table}");
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relangle(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());

    let out = relangle(tmp.path(), &["synth", "--out", "d", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    let out = relangle(tmp.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("export-colored"));
}

#[test]
fn input_errors_exit_one_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relangle(
        tmp.path(),
        &["features", "--input", "missing.xyz", "--out", "f.xyz"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("f.xyz").exists());

    fs::write(tmp.path().join("bad.xyz"), "0 0 0\n0 0 nan\n").unwrap();
    let out = relangle(
        tmp.path(),
        &["normalize", "--input", "bad.xyz", "--out", "n.xyz"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.xyz:2"));
    assert!(!tmp.path().join("n.xyz").exists());

    let mut synth = vec!["synth", "--seed", "1", "--out", "data"];
    synth.extend(SMALL);
    ok(tmp.path(), &synth);
    let out = relangle(
        tmp.path(),
        &["features", "--input", "data", "--out", "feat", "-k", "2"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("feat").exists());

    let out = relangle(
        tmp.path(),
        &[
            "segment",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "s.xyz",
            "--threshold",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("s.xyz").exists());

    let out = relangle(tmp.path(), &["synth", "--out", "bad", "--width", "-4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mut synth = vec!["synth", "--out", "data"];
    synth.extend(SMALL);
    fs::write(tmp.path().join("cfg.toml"), "seed = 4\nneighborhood = 2\n").unwrap();
    synth.extend(["--config", "cfg.toml"]);
    ok(tmp.path(), &synth);

    let mut direct = vec!["synth", "--seed", "4", "--out", "direct"];
    direct.extend(SMALL);
    ok(tmp.path(), &direct);
    assert_eq!(
        snapshot(&tmp.path().join("data")),
        snapshot(&tmp.path().join("direct"))
    );

    let out = relangle(
        tmp.path(),
        &[
            "--config",
            "cfg.toml",
            "features",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "f.xyz",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    ok(
        tmp.path(),
        &[
            "--config",
            "cfg.toml",
            "features",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "f.xyz",
            "-k",
            "12",
        ],
    );
    let text = fs::read_to_string(tmp.path().join("f.xyz")).unwrap();
    assert!(text.contains("# neighborhood: 12"));

    fs::write(tmp.path().join("typo.toml"), "neighbourhood = 20\n").unwrap();
    let out = relangle(
        tmp.path(),
        &[
            "--config",
            "typo.toml",
            "features",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "g.xyz",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn score_matches_segment_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let mut synth = vec!["synth", "--seed", "11", "--out", "data"];
    synth.extend(SMALL);
    ok(tmp.path(), &synth);
    let summary = ok(
        tmp.path(),
        &[
            "segment",
            "--input",
            "data/surface_000.xyz",
            "--out",
            "pred.xyz",
            "--threshold",
            "0.1",
        ],
    );
    let summary: serde_json::Value = serde_json::from_str(&summary).unwrap();
    ok(
        tmp.path(),
        &[
            "score",
            "--pred",
            "pred.xyz",
            "--truth",
            "data/surface_000.xyz",
            "--out",
            "s",
        ],
    );
    let rows: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("s/score.json")).unwrap()).unwrap();
    assert_eq!(rows[0]["miou"], summary["scores"]["miou"]);
    assert_eq!(rows[0]["tp"], summary["counts"]["tp"]);
}
