use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cascade-bandits");

fn cli(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("CASCADE_BANDITS_SEED");
    if let Some(s) = seed {
        cmd.env("CASCADE_BANDITS_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "
[environment]
type = cascade
L = 8
K = 2
p = 0.2
delta = 0.15

[policy]
name = cascade-ucb1

[experiment]
n_steps = 2000
n_runs = 3
master_seed = 4
log_every = 500
";

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.ini", SMALL);
    let out = dir.path().join("curve.csv");
    let res = cli(&["run", &config, "--out", out.to_str().unwrap(), "--threads", "2"], None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,mean_cum_regret,stderr,n_runs,config_fingerprint");
    let steps: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["0", "500", "1000", "1500", "2000"]);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("curve.json")).unwrap()).unwrap();
    let fingerprint = lines[1].rsplit(',').next().unwrap();
    assert_eq!(summary["config_fingerprint"], fingerprint);
    assert_eq!(summary["final"]["n_runs"], 3);
}

#[test]
fn stdout_csv_is_reproducible_and_seed_override_changes_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.ini", SMALL);
    let a = cli(&["run", &config], None);
    let b = cli(&["run", &config, "--threads", "1"], None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = cli(&["run", &config], Some("12345"));
    assert!(c.status.success());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write_config(dir.path(), "bad.ini", &SMALL.replace("log_every", "log_evry"));
    let res = cli(&["run", &bad_key], None);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("log_evry"));

    let k_too_big = write_config(dir.path(), "k.ini", &SMALL.replace("K = 2", "K = 9"));
    assert_eq!(cli(&["run", &k_too_big], None).status.code(), Some(1));

    let missing = dir.path().join("nope.ini");
    assert_eq!(cli(&["run", missing.to_str().unwrap()], None).status.code(), Some(1));

    let res = cli(&["run", &config_ok(dir.path())], Some("minus one"));
    assert_eq!(res.status.code(), Some(1));

    assert_eq!(cli(&["reproduce", "table9"], None).status.code(), Some(1));
}

fn config_ok(dir: &Path) -> String {
    write_config(dir, "ok.ini", SMALL)
}

#[test]
fn bounds_prints_the_known_instance_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "b.ini",
        &SMALL
            .replace("L = 8", "L = 16")
            .replace("n_steps = 2000", "n_steps = 100000"),
    );
    let res = cli(&["bounds", &config], None);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("12947.1144"), "{text}");
    assert!(text.contains("1376.5770"), "{text}");
    assert!(text.contains("17.883180"), "{text}");
}

#[test]
fn selfcheck_passes() {
    let res = cli(&["selfcheck"], None);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{text}");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let res = cli(&["bounds", path.to_str().unwrap()], None);
        assert!(res.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&res.stderr));
    }
}
