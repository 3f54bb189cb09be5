use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bohmlab"));
    c.env_remove("BOHMLAB_THREADS");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) -> i32 {
    bin()
        .arg(cmd)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

const SMALL_FIELD: &str = r#"
name = "small"
[state]
modes = [[3, 3], [3, 4], [4, 5]]
re = [1.0, 1.0, 0.7071067811865476]
omega1 = 1.0
omega2 = 0.7071067811865476
[time]
t0 = 0.1
t1 = 0.3
dt = 0.05
[field]
nx = 21
ny = 21
[chaos]
horizon = 5.0
random_ics = 3
bootstrap_samples = 50
"#;

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn equal_weight_trajectory_closes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("traj", &scenarios().join("equal_weight.toml"), tmp.path(), &[]), 0);
    let r = rows(&tmp.path().join("traj.csv"));
    let p = |row: &Vec<String>| [row[2].parse::<f64>().unwrap(), row[3].parse::<f64>().unwrap()];
    let (a, b) = (p(&r[0]), p(r.last().unwrap()));
    assert!((a[0] - b[0]).hypot(a[1] - b[1]) < 1e-4);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert!(tmp.path().join("resolved_config.json").exists());
}

#[test]
fn typical_nodes_and_collisions() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("nodes", &scenarios().join("typical.toml"), tmp.path(), &[]), 0);
    let nodes = rows(&tmp.path().join("nodes.csv"));
    let mut ids: Vec<usize> = nodes.iter().map(|r| r[0].parse().unwrap()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids, (1..=31).collect::<Vec<_>>());
    let events = rows(&tmp.path().join("events.csv"));
    let hit = events.iter().any(|e| {
        e[0] == "20" && e[2] == "collision_with_fixed" && e[3] == "17" && (e[1].parse::<f64>().unwrap() - 1.84025).abs() < 1e-3
    });
    assert!(hit, "{events:?}");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), SMALL_FIELD);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for cmd in ["field", "chaos"] {
        assert_eq!(run(cmd, &sc, &a, &[]), 0);
        assert_eq!(run(cmd, &sc, &b, &[]), 0);
    }
    for f in ["field.csv", "chaos.csv", "resolved_config.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_changes_random_ensemble() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), SMALL_FIELD);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("chaos", &sc, &a, &["--seed", "1"]), 0);
    assert_eq!(run("chaos", &sc, &b, &["--seed", "2"]), 0);
    assert_ne!(rows(&a.join("chaos.csv")), rows(&b.join("chaos.csv")));
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["seed"], 1);
}

#[test]
fn thread_count_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), SMALL_FIELD);
    let code = bin()
        .args(["field", "--scenario"])
        .arg(&sc)
        .arg("--out")
        .arg(tmp.path())
        .env("BOHMLAB_THREADS", "2")
        .status()
        .unwrap()
        .code()
        .unwrap();
    assert_eq!(code, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("field", &tmp.path().join("missing.toml"), tmp.path(), &[]), 1);
    let sc = write_scenario(tmp.path(), &format!("{SMALL_FIELD}\nbogus = 1\n"));
    assert_eq!(run("field", &sc, tmp.path(), &[]), 1);
}

#[test]
fn numerical_failure_exits_with_two_and_keeps_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{SMALL_FIELD}\n[[initial_conditions]]\nx = 0.5\ny = 0.5\nt0 = 0.1\n\n[[initial_conditions]]\nx = 0.0\ny = 0.0\nt0 = 0.1\n"
    );
    let sc = write_scenario(tmp.path(), &text);
    assert_eq!(run("traj", &sc, tmp.path(), &[]), 2);
    let r = rows(&tmp.path().join("traj.csv"));
    assert!(r.iter().any(|row| row[0] == "0"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "numerical_failure");
}
