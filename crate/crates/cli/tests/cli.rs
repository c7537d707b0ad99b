use std::fs;
use std::process::Command;

fn lrcomb() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lrcomb"));
    cmd.env_remove("LRCOMB_OUT_DIR");
    cmd
}

#[test]
fn oracle_prints_allocation_and_value() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str, text: &str| {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        path
    };
    let theta = p("theta.csv", "3,1\n2,2\n0,4\n");
    let caps = p("caps.csv", "1,2\n");
    let dems = p("dems.csv", "1\n1\n1\n");
    let out = lrcomb()
        .args(["oracle", "--theta"])
        .arg(&theta)
        .arg("--capacities")
        .arg(&caps)
        .arg("--demands")
        .arg(&dems)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout, "1,0\n0,1\n0,1\nvalue 9\n");
}

const CONFIG: &str = "[runner]\nhorizon = 5\nn_seeds = 1\noutput = \"ignored/run.csv\"\n[world]\nn_users = 6\nn_items = 4\nrank = 2\n[[policies]]\nkind = \"lrcomb\"\n[[policies]]\nkind = \"icf\"\n";

#[test]
fn run_honours_output_directory_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    let out = lrcomb()
        .args(["run", "--seeds", "2", "--threads", "1", "--config"])
        .arg(&cfg)
        .env("LRCOMB_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("run.csv")).unwrap();
    assert!(csv.starts_with("policy,seed,t,reward,"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 5);
    assert!(String::from_utf8(out.stdout).unwrap().contains("LR-COMB"));
}

#[test]
fn run_writes_to_explicit_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let target = dir.path().join("explicit.csv");
    let status = lrcomb()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&target)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_eq!(fs::read_to_string(&target).unwrap().lines().count(), 11);
}

#[test]
fn bad_config_fails_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, CONFIG.replace("kind = \"icf\"", "kind = \"greedy\"")).unwrap();
    let out = lrcomb().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("policies[1].kind"), "{stderr}");
}

#[test]
fn bench_runs_on_small_sizes() {
    let out = lrcomb()
        .args(["bench", "--users", "20", "--items", "10", "--rank", "2", "--reps", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("exact allocation"));
}
