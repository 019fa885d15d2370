use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aging(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aging")).args(args).env_remove("AGING_WORKERS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TASEP: &str = r#"
[experiment]
id = "tasep-small"
model = "tasep"
replicas = 200
master_seed = 5
output = "OUT"

[tasep]
ring_size = 256
s = 10.0
a = [1.5, 2.0]
"#;

#[test]
fn table_prints_one_row_per_grid_point() {
    let out = aging(&["table", "rho_kpz", "1,1.5,2,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "experiment,params,estimate,stderr,reference,n,wall_s");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(3) == Some("")));
}

#[test]
fn reruns_and_worker_counts_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let cfg = write(dir.path(), &format!("{name}.toml"), &TASEP.replace("OUT", &format!("{name}.csv")));
        let out = aging(&["run", &cfg, "--workers", workers]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(dir.path().join(format!("{name}.csv"))).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("tasep-small,estimator=direct;L=256;s=10;a=1.5;j=0;k=0,"));
}

#[test]
fn invalid_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &TASEP.replace("OUT", "x.csv").replace("256", "64"));
    let out = aging(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ring_size"));
    assert!(!dir.path().join("x.csv").exists());

    let cfg = write(dir.path(), "typo.toml", &TASEP.replace("OUT", "x.csv").replace("s = 10.0", "s = 10.0\nsteps = 3"));
    let out = aging(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("steps") && err.contains("line"), "{err}");
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "gl.toml",
        r#"
[experiment]
id = "gl"
model = "glew"
replicas = 400
output = "gl.csv"

[glew]
dt = 0.01
s = 1.0
a = [2.0]
"#,
    );
    assert_eq!(aging(&["run", &cfg]).status.code(), Some(0));
    let csv = dir.path().join("gl.csv");
    let csv = csv.to_str().unwrap();
    let loose = write(dir.path(), "loose.toml", "abs_tol = 0.2\nz = 3.0\n");
    let strict = write(dir.path(), "strict.toml", "abs_tol = 0.0\nz = 0.0\n");
    assert_eq!(aging(&["compare", csv, &loose]).status.code(), Some(0));
    assert_eq!(aging(&["compare", csv, &strict]).status.code(), Some(1));

    let table = aging(&["table", "rho_ew", "2"]);
    let plain = write(dir.path(), "plain.csv", &String::from_utf8(table.stdout).unwrap());
    assert_eq!(aging(&["compare", &plain, &loose]).status.code(), Some(2));
    let skip = write(dir.path(), "skip.toml", "skip_missing = true\n");
    assert_eq!(aging(&["compare", &plain, &skip]).status.code(), Some(0));
}
