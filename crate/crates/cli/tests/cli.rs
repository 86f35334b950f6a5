use std::path::PathBuf;
use std::process::{Command, Output};

fn helmdd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helmdd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("helmdd-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn solve_writes_outputs() {
    let dir = scratch("solve");
    let out = helmdd(&[
        "solve", "--problem", "waveguide", "--k", "6", "--subdomains", "3", "--nppwl", "10",
        "--overlap-cells", "2", "--precond", "osds", "--check-direct", "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("osds: iterations"), "{stdout}");
    let residuals = std::fs::read_to_string(dir.join("residuals.csv")).unwrap();
    assert!(residuals.starts_with("iter,residual\n0,"));
    let field = std::fs::read_to_string(dir.join("solution.field")).unwrap();
    let header: Vec<&str> = field.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header.len(), 3);
    let manifest = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("[spec]") && manifest.contains("[result]"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_file_with_flag_override() {
    let dir = scratch("config");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "problem = \"cavity\"\nk = 6.0\nsubdomains = 2\nnppwl = 10.0\n").unwrap();
    let out = helmdd(&["solve", "--config", cfg.to_str().unwrap(), "--subdomains", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("cavity N=3"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_prints_table() {
    let out = helmdd(&[
        "sweep", "--problem", "waveguide", "--k", "6", "--nppwl", "10", "--overlap-cells", "2",
        "--vary", "subdomains", "--values", "2,3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "subdomains,jacobi,jacobi_1e-3,ds,ds_1e-3,osds,osds_1e-3");
    assert_eq!(lines.len(), 3);
}

#[test]
fn analyze_symbols_csv() {
    let out = helmdd(&[
        "analyze-symbols", "--k", "20", "--strips", "4", "--overlap", "0.1", "--xi-max", "40",
        "--samples", "11",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "xi,lambda_re,lambda_im,rho_j_abs,rho,C");
    assert_eq!(lines.len(), 12);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
}

#[test]
fn bad_arguments_fail() {
    assert!(!helmdd(&["solve", "--problem", "wedge", "--k", "5"]).status.success());
    assert!(!helmdd(&["analyze-symbols", "--k", "20", "--strips", "1", "--overlap", "0.1", "--xi-max", "1"])
        .status
        .success());
    assert!(!helmdd(&["sweep", "--vary", "overlap"]).status.success());
}
