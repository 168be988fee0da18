use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
master_seed = 7
system_sizes = [16, 32, 64]
replicates = 4
"#;

fn polylab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polylab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_config(text: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), text).unwrap();
    dir
}

#[test]
fn simulate_is_reproducible() {
    let dir = with_config(SMALL);
    for out in ["a", "b"] {
        let o = polylab(dir.path(), &["--config", "run.toml", "--out", out, "simulate"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["ground_state.csv", "decomposition.csv", "ground_state.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn sweep_then_report() {
    let dir = with_config(SMALL);
    let o = polylab(dir.path(), &["--config", "run.toml", "--out", "out", "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(sweep.starts_with('#'));
    let o = polylab(dir.path(), &["--config", "run.toml", "--out", "out", "report"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["data"]["sizes"].as_array().unwrap().len(), 3);
}

#[test]
fn report_without_sweep_is_a_runtime_error() {
    let dir = with_config(SMALL);
    let o = polylab(dir.path(), &["--config", "run.toml", "--out", "empty", "report"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn count_table_contains_small_ball() {
    let dir = with_config("count_max_dim = 3\ncount_max_d = 2.0\n");
    let o = polylab(dir.path(), &["--config", "run.toml", "--out", "out", "count"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("out/count.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("2,1,5,")));
    assert!(table.lines().any(|l| l.starts_with("1,2,3,")));
}

#[test]
fn invalid_input_exits_with_validation_code() {
    let dir = with_config("no_such_key = 1\n");
    assert_eq!(polylab(dir.path(), &["--config", "run.toml", "simulate"]).status.code(), Some(1));
    let dir = with_config("system_sizes = [24]\n");
    assert_eq!(polylab(dir.path(), &["--config", "run.toml", "simulate"]).status.code(), Some(1));
    assert_eq!(polylab(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(polylab(dir.path(), &["--help"]).status.code(), Some(0));
}
