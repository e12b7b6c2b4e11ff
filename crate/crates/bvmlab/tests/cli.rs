//! CLI surface: subcommands, exit codes, output files.

use std::process::Command;

fn bvmlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bvmlab"))
}

fn write_config(dir: &std::path::Path, extra: &str) -> std::path::PathBuf {
    let out = dir.join("report");
    let text = format!(
        r#"
schema_version = 1
master_seed = 5
replications = 8
n_grid = [256, 1024, 4096, 16384, 65536]

[output]
path = "{}"
plots = true

[basis]
kind = "dyadic_wavelet"
j0 = 1
l_max = 5

[signal]
kind = "holder_decay"
gamma = 1.0
m = 0.8
seed = 7

[prior]
family = "gaussian"
gamma = 1.0

[[set]]
kind = "hdelta_ball"
alpha = 0.1
delta = 1.0
sample_count = 128
{extra}
"#,
        out.display()
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_reports_and_rates_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let status = bvmlab().arg("run").arg(&config).status().unwrap();
    assert!(status.success());
    let json = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    assert!(json.exists() && csv.exists());
    assert!(dir.path().join("report.plots/l2risk.csv").exists());

    let out = bvmlab()
        .arg("rates")
        .arg(&json)
        .arg("--quantity")
        .arg("l2risk")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("slope = "), "got: {text}");

    // the posterior risk must shrink with n even at these tiny sizes
    let slope: f64 = text.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(slope < -0.3, "slope {slope}");

    let report_out = bvmlab()
        .arg("report")
        .arg(&json)
        .arg("--format")
        .arg("csv")
        .output()
        .unwrap();
    assert!(report_out.status.success());
    assert!(String::from_utf8(report_out.stdout)
        .unwrap()
        .starts_with("cell,n,"));
}

#[test]
fn validate_rejects_bad_configs_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let ok = bvmlab().arg("validate").arg(&config).output().unwrap();
    assert!(ok.status.success());
    assert_eq!(String::from_utf8(ok.stdout).unwrap().trim(), "OK");

    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("alpha = 0.1", "alpha = 1.5");
    std::fs::write(&bad, text).unwrap();
    let out = bvmlab().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("set[0].alpha"));

    let garbled = dir.path().join("garbled.toml");
    std::fs::write(&garbled, "this is not toml [").unwrap();
    let out = bvmlab().arg("validate").arg(&garbled).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_breaches_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[[check]]
set = 0
metric = "coverage"
min = 0.999
"#,
    );
    let status = bvmlab()
        .arg("run")
        .arg(&config)
        .arg("--check")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn worker_env_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let json = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");

    assert!(bvmlab()
        .arg("run")
        .arg(&config)
        .env("BVMLAB_WORKERS", "1")
        .status()
        .unwrap()
        .success());
    let json1 = std::fs::read(&json).unwrap();
    let csv1 = std::fs::read(&csv).unwrap();

    assert!(bvmlab()
        .arg("run")
        .arg(&config)
        .env("BVMLAB_WORKERS", "2")
        .status()
        .unwrap()
        .success());
    assert_eq!(json1, std::fs::read(&json).unwrap());
    assert_eq!(csv1, std::fs::read(&csv).unwrap());
}
