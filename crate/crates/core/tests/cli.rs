use std::path::Path;
use std::process::{Command, Output};

fn leafstack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafstack"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = leafstack(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn one_line_error(out: &Output) -> String {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "), "{err}");
    err
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--seed", "7", "--out", &p(dir.path(), "a.csv")]);
    ok(&["synth", "--seed", "7", "--out", &p(dir.path(), "b.csv")]);
    ok(&["synth", "--seed", "8", "--out", &p(dir.path(), "c.csv")]);
    let read = |n| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn full_pipeline_populates_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--seed", "3", "--out", &p(d, "s.csv")]);
    let before = std::fs::read(d.join("s.csv")).unwrap();

    ok(&["preprocess", "--in", &p(d, "s.csv"), "--out", &p(d, "map.json")]);
    let map: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("map.json")).unwrap()).unwrap();
    assert!(map["reduced_band_count"].as_u64().unwrap() < map["original_band_count"].as_u64().unwrap());

    ok(&["train", "--in", &p(d, "s.csv"), "--out", &p(d, "run"), "--seed", "3"]);
    for f in ["model.json", "selection.json", "split.json"] {
        assert!(d.join("run").join(f).is_file(), "{f}");
    }
    ok(&["evaluate", "--in", &p(d, "s.csv"), "--model", &p(d, "run/model.json"), "--out", &p(d, "run")]);
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("run/metrics.json")).unwrap()).unwrap();
    for key in [
        "stage_gdd",
        "split",
        "confusion",
        "accuracy",
        "recall_infected",
        "specificity",
        "precision",
        "f1",
        "auc",
        "threshold",
    ] {
        assert!(!m[key].is_null(), "{key} missing");
    }
    assert_eq!(m["split"], "test");
    for key in ["tp", "fp", "tn", "fn"] {
        assert!(m["confusion"][key].is_u64(), "{key}");
    }
    assert!(d.join("run/metrics_validation.json").is_file());

    ok(&[
        "importance",
        "--in",
        &p(d, "s.csv"),
        "--model",
        &p(d, "run/model.json"),
        "--out",
        &p(d, "imp.csv"),
        "--repeats",
        "2",
    ]);
    let imp = std::fs::read_to_string(d.join("imp.csv")).unwrap();
    assert!(imp.starts_with("representative_nm,importance_mean,importance_sd\n"));
    let model: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("run/model.json")).unwrap()).unwrap();
    let groups = model["band_group_map"]["reduced_band_count"].as_u64().unwrap() as usize;
    assert_eq!(imp.lines().count() - 1, groups);

    ok(&["rmd", "--in", &p(d, "s.csv"), "--out", &p(d, "rmd.csv")]);
    let rmd = std::fs::read_to_string(d.join("rmd.csv")).unwrap();
    assert!(rmd.starts_with("wavelength_nm,mu_non,mu_inf,rmd\n"));

    // inputs are never modified
    assert_eq!(std::fs::read(d.join("s.csv")).unwrap(), before);
}

#[test]
fn gdd_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    std::fs::write(&t, "date,t_min,t_max,t_mean\n2024-05-01,,,15\n2024-05-02,,,20\n2024-05-03,,,12\n").unwrap();
    ok(&["gdd", "--in", t.to_str().unwrap(), "--out", &p(dir.path(), "g.json")]);
    let g: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(g["gdd"], 17.0);
    assert_eq!(g["stage"], "pre-vegetative");
}

#[test]
fn malformed_row_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.csv");
    std::fs::write(&f, "sample_id,plant_id,label,stage_gdd,wl_400,wl_401\na,p,0,585,0.1,0.2\nb,q,1,585,0.1,oops\n").unwrap();
    let out = leafstack(&["train", "--in", f.to_str().unwrap(), "--out", &p(dir.path(), "run")]);
    let err = one_line_error(&out);
    assert!(err.contains("row 3"), "{err}");
    assert!(!dir.path().join("run").exists());
}

#[test]
fn config_schema_violation_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"train": {"selection": {"max_modelz": 3}}}"#).unwrap();
    let out = leafstack(&["synth", "--config", cfg.to_str().unwrap(), "--out", &p(dir.path(), "s.csv")]);
    let err = one_line_error(&out);
    assert!(err.contains("max_modelz"), "{err}");
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn unknown_flag_and_missing_input_fail() {
    let out = leafstack(&["train", "--bogus"]);
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let out = leafstack(&["train", "--in", &p(dir.path(), "none.csv"), "--out", &p(dir.path(), "run")]);
    let err = one_line_error(&out);
    assert!(err.contains("none.csv"), "{err}");
}

#[test]
fn help_documents_flags() {
    for sub in ["synth", "preprocess", "gdd", "rmd", "train", "evaluate", "importance"] {
        let out = leafstack(&[sub, "--help"]);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("--threads"), "{sub}");
        assert!(text.contains("--out"), "{sub}");
    }
}
