use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lmkyle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmkyle")).args(args).output().expect("binary runs")
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str) -> PathBuf {
    let text = stdout(&lmkyle(&["dump-config", "--experiment", name]));
    let path = dir.join(format!("{name}.conf"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn list_has_nine_stable_entries() {
    let a = stdout(&lmkyle(&["list"]));
    assert_eq!(a.lines().count(), 9);
    assert_eq!(a, stdout(&lmkyle(&["list"])));
}

#[test]
fn list_matches_readme_table() {
    let readme = std::fs::read_to_string(repo().join("README.md")).unwrap();
    let table: Vec<(String, String)> = readme
        .split("### Experiments")
        .nth(1)
        .unwrap()
        .lines()
        .skip_while(|l| !l.starts_with('|'))
        .take_while(|l| l.starts_with('|'))
        .skip(2)
        .map(|l| {
            let cells: Vec<&str> = l.trim_matches('|').split('|').map(str::trim).collect();
            (cells[0].to_string(), cells[1].to_string())
        })
        .collect();
    let listed: Vec<(String, String)> = stdout(&lmkyle(&["list"]))
        .lines()
        .map(|l| {
            let (name, desc) = l.split_once(' ').unwrap();
            (name.to_string(), desc.trim().to_string())
        })
        .collect();
    assert_eq!(table, listed);
}

#[test]
fn shipped_configs_are_the_defaults() {
    for line in stdout(&lmkyle(&["list"])).lines() {
        let name = line.split_whitespace().next().unwrap();
        let path = repo().join("configs").join(format!("{name}.conf"));
        let shipped = std::fs::read_to_string(&path).unwrap();
        assert_eq!(shipped, stdout(&lmkyle(&["dump-config", "--experiment", name])), "{name}");
    }
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "markov-equilibrium");
    let again = lmkyle(&["dump-config", path.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(stdout(&again), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn bridge_with_zero_paths_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "bridge");
    let out = dir.path().join("out");
    let o = lmkyle(&["run", path.to_str().unwrap(), "--paths", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "[experiment]\nname = bridge\nname = bridge\n").unwrap();
    let o = lmkyle(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(lmkyle(&["run", dir.path().join("missing.conf").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn fig_impact_h_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let path = write_config(dir.path(), "fig-impact-h");
    let o = lmkyle(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(out.join("fig-impact-h.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,lambda_H0.6,lambda_H0.75,lambda_H0.9"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] < v[2] && v[2] < v[3], "{line}");
        rows += 1;
    }
    assert_eq!(rows, 201);
    assert!(std::fs::read_to_string(out.join("summary.txt")).unwrap().contains("result: PASS"));
}

#[test]
fn statistical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "optimality");
    let out = dir.path().join("out");
    let o = lmkyle(&["run", path.to_str().unwrap(), "--paths", "2000", "--steps", "128", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL optimality(beta x 0.8)"));
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "depth-martingale");
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = lmkyle(&["run", path.to_str().unwrap(), "--paths", "500", "--steps", "128", "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.code().is_some());
        std::fs::read(out.join("depth-martingale.csv")).unwrap()
    };
    let a = run("a", "7");
    assert_eq!(a, run("b", "7"));
    assert_ne!(a, run("c", "8"));
}
