use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const DOUBLING: &str = r#"
map = { name = "doubling" }
group = { kind = "torus", dim = 1 }
tau = { name = "torus_linear", slopes = [1.0] }
kappa_max = 4
collocation = 32
n_max = 5
"#;

fn run(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twistop"));
    if let Some(text) = config {
        let path = dir.join("config.toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out").arg(dir.join("out")).args(args).output().unwrap()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

#[test]
fn pressure_of_doubling_srb() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), Some(DOUBLING), &["pressure"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(dir.path(), "pressure.json");
    for route in ["eigenvalue", "determinant", "orbit_sum"] {
        assert!(v["result"]["phi"][route].as_f64().unwrap().abs() < 1e-10);
        assert!((v["result"]["2phi"][route].as_f64().unwrap() + std::f64::consts::LN_2).abs() < 1e-10);
    }
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn reports_carry_hash_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), Some(DOUBLING), &["--seed", "7", "spectrum"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(dir.path(), "spectrum.json");
    let meta = &v["meta"];
    assert_eq!(meta["tool"], "twistop");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["seed"], 7);
    let sha = meta["config_sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
    assert!(sha.chars().all(|c| c.is_ascii_hexdigit()));
    let first = &v["result"]["irreps"][0];
    for key in ["group", "irrep_id", "kappa", "N", "eigenvalues", "traces"] {
        assert!(!first[key].is_null(), "missing {key}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        "group = { kind = \"su2\" }",
        "map = { name = \"tent\" }\ngroup = { kind = \"su2\" }",
        "map = { name = \"doubling\" }\ngroup = { kind = \"torus\", dim = 1 }\ncollocation = 0",
        "not toml at all [",
    ];
    for text in bad {
        let out = run(dir.path(), Some(text), &["pressure"]);
        assert_eq!(out.status.code(), Some(2), "config accepted: {text}");
    }
    assert_eq!(run(dir.path(), None, &["pressure"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), None, &["--format", "xml", "gamma-table"]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{DOUBLING}\n[tolerances]\npressure = 1e-300\n");
    let out = run(dir.path(), Some(&text), &["pressure"]);
    assert_eq!(out.status.code(), Some(3));
    let v = report(dir.path(), "pressure.json");
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

fn strip_meta(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for cmd in ["spectrum", "traces", "heataverage"] {
        assert_eq!(run(a.path(), Some(DOUBLING), &["--threads", "1", cmd]).status.code(), Some(0));
        assert_eq!(run(b.path(), Some(DOUBLING), &["--threads", "1", cmd]).status.code(), Some(0));
        assert_eq!(run(c.path(), Some(DOUBLING), &["--threads", "4", cmd]).status.code(), Some(0));
        let name = format!("{cmd}.json");
        let ta = fs::read(a.path().join("out").join(&name)).unwrap();
        let tb = fs::read(b.path().join("out").join(&name)).unwrap();
        assert_eq!(ta, tb, "{cmd} differs between identical runs");
        let mut va = report(a.path(), &name);
        let mut vc = report(c.path(), &name);
        va["meta"] = Value::Null;
        vc["meta"] = Value::Null;
        assert_eq!(va, vc, "{cmd} differs between thread counts");
    }
    for dir in [&a, &c] {
        assert_eq!(
            run(dir.path(), Some(DOUBLING), &["--format", "csv", "--threads", "2", "traces"]).status.code(),
            Some(0)
        );
    }
    let csv = |d: &Path| fs::read_to_string(d.join("out").join("traces_traces.csv")).unwrap();
    assert_eq!(strip_meta(&csv(a.path())), strip_meta(&csv(c.path())));
}

#[test]
fn csv_tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), Some(DOUBLING), &["--format", "csv", "heataverage"]);
    assert_eq!(out.status.code(), Some(0));
    let grid = fs::read_to_string(dir.path().join("out").join("heataverage_grid.csv")).unwrap();
    let mut lines = grid.lines();
    assert!(lines.next().unwrap().starts_with("# tool=twistop"));
    assert_eq!(lines.next().unwrap(), "t,n,S,diagonal,bound,margin");
    assert_eq!(lines.count(), 9 * 5);
    assert!(dir.path().join("out").join("heataverage_checks.csv").exists());
}

#[test]
fn gamma_table_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), None, &["gamma-table"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(dir.path(), "gamma_table.json");
    assert!(v["meta"]["config_sha256"].is_null());
    let su2 = &v["result"]["groups"][4];
    assert_eq!(su2["group"], "SU(2)");
    assert_eq!(su2["gamma_improved"], 0.5);
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for cmd in ["pressure", "spectrum"] {
            let out = run(dir.path(), Some(&text), &[cmd]);
            assert_eq!(out.status.code(), Some(0), "{} {cmd}", path.display());
        }
        n += 1;
    }
    assert!(n >= 3);
}
