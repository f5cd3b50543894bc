use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn tpf(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpf"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("TPF_SIM_DT")
        .output()
        .expect("spawn tpf")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn simulate_theorem_config_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = config("theorem_sine.toml");
    let o = tpf(dir.path(), &["-q", "-c", &cfg, "--set", "sim.t_end=10", "simulate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert!(lines.next().unwrap().starts_with("t,s,x,y,psi,kappa"));
    assert_eq!(lines.count(), 10_001);
    let monitors = fs::read_to_string(dir.path().join("monitors.csv")).unwrap();
    assert!(monitors.contains("passed,true"), "{monitors}");
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn straight_line_manual_config_blows_up_with_code_3() {
    let dir = TempDir::new().unwrap();
    let cfg = config("straight_line_manual.toml");
    let o = tpf(dir.path(), &["-q", "-c", &cfg, "simulate"]);
    assert_eq!(code(&o), 3);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("run failed"), "{report}");
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn curvature_at_the_limit_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = tpf(
        dir.path(),
        &["-q", "--set", "path.kappa_max=0.5", "--set", "vehicle.d=2", "simulate"],
    );
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn stiff_step_is_reported() {
    let dir = TempDir::new().unwrap();
    let cfg = config("theorem_sine.toml");
    // dt * k2 * D = 1e-3 * 200 * 250 = 50
    let o = tpf(
        dir.path(),
        &[
            "-q", "-c", &cfg, "--set", "gains.k2=200", "--set", "gains.D=250", "--set", "sim.t_end=0.05", "simulate",
        ],
    );
    assert!(code(&o) == 0 || code(&o) == 1 || code(&o) == 3, "{o:?}");
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.lines().any(|l| l.contains("dt*k2*D")), "{report}");
}

#[test]
fn gains_subcommand() {
    let dir = TempDir::new().unwrap();
    let o = tpf(dir.path(), &["gains", "--k2", "200", "--beta", "8.1", "--D", "50"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("k1 = 7500"), "{s}");
    assert!(s.contains(": ok"), "{s}");

    assert_eq!(code(&tpf(dir.path(), &["gains", "--k2", "19"])), 2);
    assert_eq!(code(&tpf(dir.path(), &["gains", "--beta", "8"])), 2);

    let o = tpf(dir.path(), &["gains", "--k2", "20", "--D", "0.01"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("WARNING"));
}

#[test]
fn certify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let quick = ["--set", "analysis.mc_runs=5", "--set", "analysis.sandwich_samples=200"];

    let mut args = vec!["-q"];
    args.extend(quick);
    args.push("certify");
    let o = tpf(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", fs::read_to_string(dir.path().join("summary.txt")).unwrap_or_default());
    let csv = fs::read_to_string(dir.path().join("certificate.csv")).unwrap();
    assert!(csv.lines().count() > 5);

    let cfg = config("straight_line_manual.toml");
    let mut args = vec!["-q", "-c", &cfg];
    args.extend(quick);
    args.push("certify");
    assert_eq!(code(&tpf(dir.path(), &args)), 1);
}

#[test]
fn sweep_requires_values() {
    let dir = TempDir::new().unwrap();
    let o = tpf(dir.path(), &["-q", "sweep", "--axis", "k2", "--values"]);
    assert_eq!(code(&o), 2);
    let o = tpf(dir.path(), &["-q", "sweep", "--axis", "nope", "--values", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn dt_sweep_reports_convergence_ratio() {
    let dir = TempDir::new().unwrap();
    let cfg = config("theorem_sine.toml");
    let o = tpf(
        dir.path(),
        &[
            "-q", "-c", &cfg, "--set", "gains.D=1", "--set", "sim.t_end=2", "sweep", "--axis", "dt", "--values",
            "4e-3,2e-3,1e-3",
        ],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut rdr = text.lines();
    let header: Vec<&str> = rdr.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == "richardson_ratio").expect("ratio column");
    let last: Vec<&str> = rdr.last().unwrap().split(',').collect();
    let r: f64 = last[i].parse().unwrap();
    assert!((r / 16.0 - 1.0).abs() < 0.2, "{r}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cfg = config("theorem_sine.toml");
    let read = |d: &TempDir| {
        let o = tpf(d.path(), &["-q", "-c", &cfg, "--set", "sim.t_end=3", "simulate"]);
        assert_eq!(code(&o), 0);
        (
            fs::read(d.path().join("trace.csv")).unwrap(),
            fs::read(d.path().join("monitors.csv")).unwrap(),
        )
    };
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(read(&a), read(&b));
}
