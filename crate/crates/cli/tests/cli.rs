use std::path::Path;
use std::process::{Command, Output};

fn isofield(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isofield"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn selftest_passes_and_reports_legendre_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isofield(tmp.path(), &["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&tmp.path().join("selftest.json"));
    assert_eq!(report["pass"], true);
    let checks = report["checks"].as_array().unwrap();
    let legendre = checks.iter().find(|c| c["name"] == "legendre_at_one").unwrap();
    assert!(legendre["identity"].as_str().unwrap().contains("256"));
    let addition = checks.iter().find(|c| c["name"] == "addition_formula").unwrap();
    assert!(addition["observed_error"].as_f64().unwrap() <= 1e-10);
    let manifest = json(&tmp.path().join("run_manifest.json"));
    assert_eq!(manifest["commands"]["selftest"]["exit_status"], 0);
}

#[test]
fn selftest_grid_fault_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[selftest]\ngrid_band_limit = 10\n");
    let out = isofield(tmp.path(), &["--config", &cfg, "selftest"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FAIL round_trip"), "{stderr}");
    let report = json(&tmp.path().join("selftest.json"));
    assert_eq!(report["pass"], false);
    assert_eq!(report["manifest"]["exit_status"], 1);
}

#[test]
fn simulate_writes_full_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nL_max = 5\nd = 2\n");
    let out = isofield(tmp.path(), &["--config", &cfg, "simulate", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("realization.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "node_index,theta,phi,v_1,v_2");
    assert_eq!(lines.count(), 6 * 11);
    let again = tempfile::tempdir().unwrap();
    isofield(again.path(), &["--config", &cfg, "simulate", "--seed", "3"]);
    assert_eq!(text, std::fs::read_to_string(again.path().join("realization.csv")).unwrap());
}

#[test]
fn band_zero_field_is_constant_per_coordinate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\nlambda_table = [[1.0, 0.25]]\n");
    assert_eq!(isofield(tmp.path(), &["--config", &cfg, "simulate"]).status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("realization.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn corrupted_sampler_fails_ergodicity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[mc]\nsampler_lambda_scale = 1.5\nreplicates = 2000\n");
    let out = isofield(tmp.path(), &["--config", &cfg, "verify", "ergodicity"]);
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(tmp.path().join("ergodicity.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",false")));
    assert!(tmp.path().join("ergodicity_report.json").exists());
}

#[test]
fn clt_csv_values_appear_in_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isofield(tmp.path(), &["verify", "clt", "--replicates", "2000", "--ell", "4,16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("clt_report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["manifest"]["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(tmp.path().join("clt.csv")).unwrap();
    for (row, line) in csv.lines().skip(1).enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let theo = &report["theoretical"][row];
        let mc = &report["montecarlo"][row];
        assert_eq!(cells[1].parse::<f64>().unwrap(), theo["d2_bound_exact"].as_f64().unwrap());
        assert_eq!(cells[3].parse::<f64>().unwrap(), mc["d2_proxy"]["value"].as_f64().unwrap());
        assert_eq!(cells[5].parse::<f64>().unwrap(), mc["ks_distance"].as_f64().unwrap());
        assert_eq!(cells[8].parse::<f64>().unwrap(), mc["emp_cum4"]["se"].as_f64().unwrap());
    }
    assert!(std::fs::read_to_string(tmp.path().join("clt.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn schoenberg_peak_at_t_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isofield(tmp.path(), &["verify", "schoenberg", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("schoenberg.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(4).map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 201);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 1.0);
    assert!(rows.iter().all(|r| r[2] <= last[2]));
    assert!(!tmp.path().join("schoenberg_report.json").exists());
}

#[test]
fn usage_and_io_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "[model]\nunknown_key = 1\n");
    assert_eq!(isofield(tmp.path(), &["--config", &bad, "selftest"]).status.code(), Some(64));
    assert_eq!(isofield(tmp.path(), &["verify", "clt", "--replicates", "50"]).status.code(), Some(64));
    assert_eq!(isofield(tmp.path(), &["verify"]).status.code(), Some(64));
    let file = tmp.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(isofield(&file.join("sub"), &["selftest"]).status.code(), Some(2));
}
