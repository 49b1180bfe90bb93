use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn flowdepth(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowdepth")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn manifest_paths(dir: &Path) -> Vec<String> {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap().to_string()).collect()
}

#[test]
fn decompose_writes_layers_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("t.mat"), "MAT1 4 4\n2 1 0 0\n0 1 3 0\n1 0 1 0\n0 0 1 1\n").unwrap();
    let out = flowdepth(&["decompose", "--input", "t.mat", "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("res");
    let paths = manifest_paths(&dir);
    assert_eq!(paths, vec!["layers.json", "report.json"]);
    for p in &paths {
        assert!(dir.join(p).exists());
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!(report["matrix_count"].as_u64().unwrap() <= 47);
    assert!(report["residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(flowdepth(&["bogus"], tmp.path()).status.code(), Some(1));
    fs::write(tmp.path().join("cfg.json"), r#"{"command": {"name": "frobnicate"}}"#).unwrap();
    let out = flowdepth(&["--config", "cfg.json", "--out", "never"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("never").exists(), "schema errors stop before any output");
    // negative determinant is a validation error, a singular matrix a numeric one
    fs::write(tmp.path().join("neg.mat"), "MAT1 2 2\n0 1\n1 0\n").unwrap();
    assert_eq!(flowdepth(&["decompose", "--input", "neg.mat", "--out", "a"], tmp.path()).status.code(), Some(1));
    fs::write(tmp.path().join("sing.mat"), "MAT1 4 4\n1 0 0 0\n0 1 0 0\n0 0 0 0\n0 0 0 0\n").unwrap();
    assert_eq!(flowdepth(&["decompose", "--input", "sing.mat", "--out", "b"], tmp.path()).status.code(), Some(2));
    assert_eq!(flowdepth(&["decompose", "--input", "missing.mat", "--out", "c"], tmp.path()).status.code(), Some(1));
}

#[test]
fn config_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("cfg.json"), r#"{"command": {"eps": 0.5}, "master_seed": 7}"#).unwrap();
    let out = flowdepth(&["universal", "--mode", "lattice", "--eps", "0.25", "--samples", "64", "--config", "cfg.json", "--out", "u"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("u/metrics.json")).unwrap()).unwrap();
    assert_eq!(m["eps"].as_f64(), Some(0.5));
    assert_eq!(m["samples"].as_u64(), Some(64));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["train-pln", "--d", "4", "--layers", "1,2", "--seeds", "2", "--steps", "40", "--log-every", "10", "--lr", "1e-3", "--seed", "3", "--out", out]
    };
    assert!(flowdepth(&args("r1"), tmp.path()).status.success());
    assert!(flowdepth(&args("r2"), tmp.path()).status.success());
    let (a, b) = (tmp.path().join("r1"), tmp.path().join("r2"));
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    for p in manifest_paths(&a) {
        assert_eq!(fs::read(a.join(&p)).unwrap(), fs::read(b.join(&p)).unwrap(), "{p}");
    }

    let out = flowdepth(&["plot-data", "--input", "r1/records.json", "--out", "plot"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("plot/plot.csv")).unwrap();
    // 2 layer counts x 2 seeds x 4 log points, loss and Frobenius error each
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2 * 4 * 2);
    assert_eq!(rows.iter().filter(|r| r.contains(",frobenius_error,") && r.starts_with("pln,4,2,")).count(), 2 * 4);
}

#[test]
fn separation_and_padded_reports() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(flowdepth(&["separation", "--d", "16", "--k", "4", "--samples", "256", "--out", "s"], tmp.path()).status.success());
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("s/report.json")).unwrap()).unwrap();
    assert!(r["selector"]["w1"].as_f64().unwrap() <= 0.5);
    assert!(r["epsnet_log_size"].as_f64().unwrap() > 0.0);
    assert!(flowdepth(&["universal", "--mode", "padded", "--samples", "128", "--out", "p"], tmp.path()).status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("p/metrics.json")).unwrap()).unwrap();
    assert!(m["max_abs_padding"].as_f64().unwrap() <= 1e-12);
    assert!(m["w2"].as_f64().unwrap() <= 1e-9);
}
