use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_irs-cr");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_configs_validate() {
    for name in ["default.json", "single_pu.json"] {
        let out = Command::new(BIN).arg("validate").arg(configs().join(name)).output().unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
    }
}

#[test]
fn validate_lists_every_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("default.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["p_max_w"] = (-1.0).into();
    v["num_sus"] = 2.into();
    let path = dir.path().join("bad.json");
    fs::write(&path, v.to_string()).unwrap();

    let out = Command::new(BIN).arg("validate").arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("p_max_w"), "{err}");
    assert!(err.contains("weights"), "{err}");
}

#[test]
fn run_writes_paired_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(configs().join("single_pu.json"))
        .args(["--algorithm", "no-irs", "--algorithm", "ao-fast", "--sweep", "elements", "--values", "2,4"])
        .args(["--trials", "2", "--max-iters", "3", "--trace", "--no-timing", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut rdr = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header[..4], ["scenario_id", "algorithm", "M", "P_max_W"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][0], pair[1][0]);
        assert_eq!(pair[0][9], pair[1][9]);
        assert_eq!(pair[0][8].parse::<f64>().unwrap(), 0.0);
    }
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn fast_algorithm_rejects_multiple_pus() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["run", "--algorithm", "ao-fast", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_pus"));
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let out = Command::new(BIN).args(["run", "--algorithm", "greedy"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ao-general"));
}
