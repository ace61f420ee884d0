use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn quepp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quepp"))
        .args(args)
        .env_remove("QUEPP_OUT_DIR")
        .output()
        .expect("spawn quepp")
}

fn desk_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.json")
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn desk_value() -> Value {
    serde_json::from_str(&fs::read_to_string(desk_config()).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn quepp_writes_results_and_passes_the_oracle_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out = quepp(&[
        "quepp",
        "--config",
        s(&desk_config()),
        "--out",
        s(tmp.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "quepp.json",
        "quepp_sweep.csv",
        "quepp_series.csv",
        "quepp_orders.csv",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let v: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("quepp.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "quepp");
    assert_eq!(v["schema_version"], 1);
    let p = &v["points"][0];
    assert_eq!(p["ideal"], 1.0);
    assert!(p["check"]["pass"].as_bool().unwrap());
    assert_eq!(p["orders"].as_array().unwrap().len(), 5);
}

#[test]
fn same_seed_gives_identical_files_and_a_new_seed_does_not() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let dir = tmp.path().join(name);
        let out = quepp(&[
            "quepp",
            "--config",
            s(&desk_config()),
            "--out",
            s(&dir),
            "--seed",
            seed,
        ]);
        assert!(out.status.success());
        fs::read_to_string(dir.join("quepp_sweep.csv")).unwrap()
    };
    let (a, b, c) = (run("a", "4"), run("b", "4"), run("c", "5"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn generate_cpt_and_sample_write_their_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = quepp(&[
        "generate",
        "--config",
        s(&desk_config()),
        "--out",
        s(tmp.path()),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("circuit.txt")).unwrap();
    assert!(quepp_core::Circuit::parse(&text).is_ok());
    assert!(tmp.path().join("manifest.json").exists());

    let out = quepp(&["cpt", "--config", s(&desk_config()), "--out", s(tmp.path())]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("cpt.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "cpt");
    assert!(tmp.path().join("cpt_order.csv").exists() && tmp.path().join("cpt_terms.csv").exists());

    let mut cfg = desk_value();
    cfg["ensemble"] = serde_json::json!({"kind": "sampler", "config": {"target_unique_paths": 4, "max_attempts": 100000}});
    let path = write_config(tmp.path(), &cfg);
    let out = quepp(&["sample", "--config", s(&path), "--out", s(tmp.path())]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = fs::read_to_string(tmp.path().join("sample_paths.csv")).unwrap();
    assert!(rows.lines().count() >= 2);
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let tmp = tempfile::tempdir().unwrap();

    let mut bad = desk_value();
    bad["unexpected"] = Value::Bool(true);
    let path = write_config(tmp.path(), &bad);
    assert_eq!(
        quepp(&["quepp", "--config", s(&path), "--out", s(tmp.path())])
            .status
            .code(),
        Some(2)
    );

    let mut bad = desk_value();
    bad["experiment"]["observable"] = "Z7".into();
    let path = write_config(tmp.path(), &bad);
    assert_eq!(
        quepp(&["cpt", "--config", s(&path), "--out", s(tmp.path())])
            .status
            .code(),
        Some(2)
    );

    let missing = tmp.path().join("nope.json");
    assert_eq!(
        quepp(&["quepp", "--config", s(&missing), "--out", s(tmp.path())])
            .status
            .code(),
        Some(1)
    );

    // The non-Clifford target exceeds the simulator's trajectory limit.
    let mut cap = desk_value();
    cap["trajectory_qubit_cap"] = 2.into();
    let path = write_config(tmp.path(), &cap);
    let out = quepp(&["quepp", "--config", s(&path), "--out", s(tmp.path())]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn report_merges_results_and_checks_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(
        quepp(&["quepp", "--config", s(&desk_config()), "--out", s(&a)])
            .status
            .success()
    );
    assert!(quepp(&[
        "quepp",
        "--config",
        s(&desk_config()),
        "--out",
        s(&b),
        "--seed",
        "99"
    ])
    .status
    .success());
    let report = tmp.path().join("report");
    let (qa, qb) = (a.join("quepp.json"), b.join("quepp.json"));

    let out = quepp(&["report", s(&qa), "--out", s(&report)]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().count() >= 6, "{table}");
    let orders = fs::read_to_string(report.join("report_orders.csv")).unwrap();
    assert_eq!(orders.lines().count(), 1 + 5);
    assert!(report.join("report_sweep.csv").exists() && report.join("report.gp").exists());

    assert_eq!(
        quepp(&["report", s(&qa), s(&qb), "--out", s(&report)])
            .status
            .code(),
        Some(2)
    );
    assert!(
        quepp(&["report", s(&qa), s(&qb), "--out", s(&report), "--force"])
            .status
            .success()
    );

    let mut v: Value = serde_json::from_str(&fs::read_to_string(&qa).unwrap()).unwrap();
    v["schema_version"] = 7.into();
    let old = tmp.path().join("old.json");
    fs::write(&old, v.to_string()).unwrap();
    assert_eq!(
        quepp(&["report", s(&old), "--out", s(&report)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn version_includes_build_description() {
    let out = quepp(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("quepp 0.1.0"));
}
