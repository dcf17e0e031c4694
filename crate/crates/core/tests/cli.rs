use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_invmeas");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn invmeas(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn moment(doc: &Value, alpha: &[u32]) -> f64 {
    doc["moments"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| {
            m["alpha"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap() as u32)
                .eq(alpha.iter().copied())
        })
        .unwrap_or_else(|| panic!("moment {alpha:?} missing"))["value"]
        .as_f64()
        .unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn logistic_solve_then_reconstruct() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("logistic.json");
    let out = invmeas(&["solve"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let doc = read_json(&tmp.path().join("moments.json"));
    assert_eq!(doc["status"], "optimal");
    assert_eq!(doc["k"], 10);
    assert_eq!(doc["d_k"], 20);
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
    assert!(doc["version"].is_string());
    assert!((moment(&doc, &[2]) - 0.5).abs() <= 0.01);
    assert!((moment(&doc, &[4]) - 0.375).abs() <= 0.01);

    let out = Command::new(BIN)
        .args(["reconstruct", "--config"])
        .arg(&cfg)
        .arg("--moments")
        .arg(tmp.path().join("moments.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["density.json", "density_grid.csv", "christoffel.json", "support_grid.csv"] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }

    // 1001 nodes on [-1, 1]: node 500 is x = 0.
    let grid = fs::read_to_string(tmp.path().join("density_grid.csv")).unwrap();
    let mut lines = grid.lines();
    assert_eq!(lines.next(), Some("x1,density"));
    let row: Vec<f64> = lines.nth(500).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[0].abs() < 1e-12);
    assert!((row[1] - std::f64::consts::FRAC_1_PI).abs() <= 0.05, "density at 0 is {}", row[1]);

    let ch = read_json(&tmp.path().join("christoffel.json"));
    let levels = ch["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    assert!(levels[0]["level"].as_f64().unwrap() < levels[1]["level"].as_f64().unwrap());
}

#[test]
fn henon_grids_are_nested() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "henon.json",
        r#"{
          "version": 1,
          "system": { "kind": "discrete", "n": 2, "map": ["1 - 1.4*x1^2 + x2", "0.3*x1"] },
          "set": { "lower": [-1.5, -0.4], "upper": [1.5, 0.4] },
          "simulate": { "x0": [0.1, 0.1], "iterations": 20000, "degree": 8, "seed": 1 },
          "reconstruct": {
            "christoffel": { "d": 8, "confidence": [0.5, 0.9] },
            "grid": { "points": [60, 40] }
          }
        }"#,
    );
    assert_eq!(invmeas(&["simulate"], &cfg, tmp.path()).status.code(), Some(0));
    let out = Command::new(BIN)
        .args(["reconstruct", "--config"])
        .arg(&cfg)
        .arg("--moments")
        .arg(tmp.path().join("empirical_moments.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let inside = |eps: &str| -> Vec<bool> {
        fs::read_to_string(tmp.path().join(format!("support_grid_{eps}.csv")))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.ends_with(",1"))
            .collect()
    };
    let (narrow, wide) = (inside("0.5"), inside("0.9"));
    assert_eq!(narrow.len(), 2400);
    assert!(narrow.iter().zip(&wide).all(|(&a, &b)| !a || b));
    assert!(narrow.iter().any(|&a| a));
}

#[test]
fn henon_budgeted_solve_reports_not_optimal() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("henon.json"))
        .unwrap()
        .replace("20000", "300");
    let cfg = write_config(tmp.path(), "henon.json", &text);
    let out = invmeas(&["solve"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let doc = read_json(&tmp.path().join("moments.json"));
    assert_eq!(doc["status"], "max_iters");
    assert_eq!(doc["uniqueness_assumed"], false);
    assert!((moment(&doc, &[0, 1]) - 0.0771).abs() <= 0.005);
}

#[test]
fn logistic_simulation_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let out = invmeas(&["simulate"], &configs().join("logistic.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&tmp.path().join("empirical_moments.json"));
    assert!(moment(&doc, &[1]).abs() <= 0.005);
    assert_eq!(doc["iterations"], 1_000_000);
}

#[test]
fn seeded_simulation_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("henon.json"))
        .unwrap()
        .replace("1000000", "100000");
    let cfg = write_config(tmp.path(), "henon.json", &text);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(invmeas(&["simulate"], &cfg, &a).status.code(), Some(0));
    assert_eq!(invmeas(&["simulate"], &cfg, &b).status.code(), Some(0));
    let fa = fs::read(a.join("empirical_moments.json")).unwrap();
    let fb = fs::read(b.join("empirical_moments.json")).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn zero_iterations_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("logistic.json"))
        .unwrap()
        .replace("\"iterations\": 1000000", "\"iterations\": 0");
    let cfg = write_config(tmp.path(), "logistic.json", &text);
    let out = invmeas(&["simulate"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("empirical_moments.json").exists());
}

#[test]
fn unknown_key_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("logistic.json"))
        .unwrap()
        .replace("\"k\": 10, \"basis\"", "\"order\": 10, \"basis\"");
    let cfg = write_config(tmp.path(), "bad.json", &text);
    let out = invmeas(&["solve"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["key"].as_str().unwrap().starts_with("relaxation"));
    assert!(err["error"]["message"].as_str().unwrap().contains("order"));
}

#[test]
fn bad_polynomial_names_the_component() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("logistic.json"))
        .unwrap()
        .replace("2*x1^2 - 1", "2*x1^^2");
    let cfg = write_config(tmp.path(), "bad.json", &text);
    let out = invmeas(&["dump-program"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["key"], "system.map[0]");
}

#[test]
fn missing_config_flag() {
    let out = Command::new(BIN).arg("solve").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["key"], "--config");
}

#[test]
fn reconstruct_names_the_missing_degree() {
    let tmp = tempfile::tempdir().unwrap();
    let moments = write_config(
        tmp.path(),
        "m.json",
        r#"{ "moments": [ { "alpha": [0], "value": 1.0 }, { "alpha": [1], "value": 0.0 },
                          { "alpha": [2], "value": 0.5 } ] }"#,
    );
    let out = Command::new(BIN)
        .args(["reconstruct", "--config"])
        .arg(configs().join("logistic.json"))
        .arg("--moments")
        .arg(&moments)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "missing_moments");
    assert_eq!(err["error"]["required_degree"], 10);
}

#[test]
fn escaping_orbit_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "escape.json",
        r#"{
          "version": 1,
          "system": { "kind": "discrete", "n": 1, "map": ["3*x1"] },
          "set": { "lower": [-1.0], "upper": [1.0] },
          "simulate": { "x0": [0.5], "iterations": 100, "burn_in": 0, "degree": 2 }
        }"#,
    );
    let out = invmeas(&["simulate"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"]["kind"], "escaped");
}

#[test]
fn dump_program_writes_text() {
    let tmp = tempfile::tempdir().unwrap();
    let out = invmeas(&["dump-program"], &configs().join("logistic.json"), tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("program.txt")).unwrap();
    assert!(!text.is_empty());
    let again = tempfile::tempdir().unwrap();
    invmeas(&["dump-program"], &configs().join("logistic.json"), again.path());
    assert_eq!(text, fs::read_to_string(again.path().join("program.txt")).unwrap());
}
