use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fedpid(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedpid"))
        .current_dir(workspace())
        .env_remove("FEDPID_OUT")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn example(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name).display().to_string()
}

#[test]
fn pid_on_the_redundancy_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedpid(dir.path(), &["pid", "--input", &example("redundancy.csv")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("pid.csv"));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains("redundant_bits"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[3] - 0.5310).abs() < 1e-4);
    assert!(row[2].abs() < 1e-6 && row[4].abs() < 1e-6);
}

#[test]
fn pareto_corners_and_oracle_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedpid(
        dir.path(),
        &[
            "aglfop", "--dataset", "synthetic", "--rows", "20000", "--eps-global", "0,inf", "--eps-local", "0,inf",
            "--oracle", "20",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("pareto.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].ends_with("oracle_accuracy"));
    let corner: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(&corner[..2], ["inf", "inf"]);
    assert_eq!(corner[2].parse::<f64>().unwrap(), 1.0);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let (solver, oracle): (f64, f64) = (f[2].parse().unwrap(), f[4].parse().unwrap());
        assert!(solver >= oracle - 1e-6 && solver <= oracle + 0.1, "{line}");
    }
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = fedpid(dir.path(), &["pid", "--input", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "no-such-flag = 3\n").unwrap();
    let out = fedpid(dir.path(), &["--config", conf.to_str().unwrap(), "pid", "--input", &example("redundancy.csv")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-flag"));

    let out = fedpid(dir.path(), &["aglfop", "--eps-global", "0:1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let conf = first.path().join("base.conf");
    std::fs::write(&conf, "dataset = synthetic\nrows = 1500\nrounds = 3\nholdout-rows = 500\n").unwrap();
    let out = fedpid(
        first.path(),
        &["--config", conf.to_str().unwrap(), "fl", "--scenario", "synergy", "--lambda", "0.8", "--arch", "logistic"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let replay = first.path().join("replay.conf");
    let out = fedpid(second.path(), &["--config", replay.to_str().unwrap(), "fl"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["predictions.csv", "pid.csv", "history.csv", "partition.json", "joint.json"] {
        assert_eq!(read(&first.path().join(file)), read(&second.path().join(file)), "{file}");
    }
}

#[test]
fn json_switch() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedpid(dir.path(), &["--json", "pid", "--input", &example("three_bit.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("pid.json"))).unwrap();
    for key in ["uni", "red", "syn"] {
        let x = v[key].as_f64().or_else(|| v[key]["value"].as_f64()).unwrap_or_else(|| panic!("{key}: {v}"));
        assert!((x - 1.0).abs() < 1e-3, "{key} = {x}");
    }
}
