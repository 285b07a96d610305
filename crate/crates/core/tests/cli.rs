//! End-to-end runs of the `boltzmann` binary.

use std::path::Path;
use std::process::Command;

use boltzmann_core::output::{read_ledger_csv, read_marginal_csv, read_moment_csv};

fn boltzmann() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boltzmann"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_writes_parseable_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = write(
        dir.path(),
        "heat.cfg",
        "N=8\nlambda=1\nscenario=sudden_heating\nend_time=0.3\nfine_length=1\nfine_per_mfp=4\ndomain_length=5\ncoarse_per_mfp=1\n",
    );
    let status = boltzmann()
        .arg("solve")
        .arg(&config)
        .arg("--output-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let moments = read_moment_csv(out.join("moments.csv")).unwrap();
    let ledger = read_ledger_csv(out.join("ledger.csv")).unwrap();
    let marginals = read_marginal_csv(out.join("marginals.csv")).unwrap();
    assert_eq!(moments.len(), 8 * ledger.len());
    assert!(!marginals.is_empty());
    assert!(ledger.iter().all(|r| r.mass_residual.abs() < 1e-12));
    let echo = std::fs::read_to_string(out.join("run.txt")).unwrap();
    boltzmann_core::config::parse_config(&echo).unwrap();
}

#[test]
fn config_errors_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.cfg", "N=8\nscenario=relaxation\n");
    let output = boltzmann().arg("solve").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("[config]") && stderr.contains("lambda"), "{stderr}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let output = boltzmann().arg("solve").arg("/nonexistent/run.cfg").output().unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn generated_weights_can_be_inspected() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("w.bin");
    let config = write(
        dir.path(),
        "w.cfg",
        &format!("N=8\nlambda=0\nscenario=relaxation\nweight_cache={}\n", cache.display()),
    );
    assert!(boltzmann().arg("gen-weights").arg(&config).status().unwrap().success());
    let output = boltzmann().arg("inspect-weights").arg(&cache).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("closed form") && text.contains("262144"), "{text}");

    std::fs::write(&cache, b"not a cache").unwrap();
    let output = boltzmann().arg("inspect-weights").arg(&cache).output().unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn bench_prints_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "b.cfg", "N=8\nlambda=0\nscenario=relaxation\n");
    let table = dir.path().join("bench.csv");
    let output = boltzmann()
        .args(["bench", config.to_str().unwrap(), "--workers", "1,2", "--repetitions", "2", "--output"])
        .arg(&table)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
}
