use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hamflow_cli::{parse_scenario, run, Mode, RunError, Scenario, EXIT_IO, EXIT_RUNTIME, EXIT_VALIDATION};
use tempfile::TempDir;

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn load(name: &str, out_dir: &Path) -> Scenario {
    let bytes = fs::read(scenarios_dir().join(name)).unwrap();
    let mut s = parse_scenario(&bytes).unwrap();
    s.output = out_dir.join(s.output.file_name().unwrap());
    s
}

fn hamflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamflow")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn shipped_scenarios_parse() {
    let mut n = 0;
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            parse_scenario(&fs::read(&path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 6);
}

#[test]
fn free_particle_writes_one_row_per_sample() {
    let dir = TempDir::new().unwrap();
    let s = load("free_particle.toml", dir.path());
    let report = run(&s).unwrap();
    let csv = fs::read_to_string(&s.output).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], hamflow::dynamics::TRAJECTORY_CSV_HEADER);
    assert_eq!(lines.len() - 1, 101);
    assert_eq!(report.rows, 101);
    assert!(report.max_constraint <= 1e-12, "{}", report.max_constraint);
    assert_eq!(report.final_energy, 0.625);
}

#[test]
fn compare_harmonic_within_tolerance() {
    let dir = TempDir::new().unwrap();
    let s = load("harmonic_compare.toml", dir.path());
    let report = run(&s).unwrap();
    let dev = report.deviation.unwrap();
    assert!(dev.max_position <= 1e-10, "{dev:?}");
}

#[test]
fn compare_reports_exceeded_tolerance() {
    let dir = TempDir::new().unwrap();
    let mut s = load("harmonic_compare.toml", dir.path());
    s.n_steps = 100;
    // The spatial blocks agree bit-for-bit here, so only a negative bound fails.
    s.tolerance = -1.0;
    match run(&s) {
        Err(e @ RunError::Check(_)) => assert_eq!(e.exit_code(), EXIT_RUNTIME),
        other => panic!("{other:?}"),
    }
}

#[test]
fn quantum_free_packet_ehrenfest() {
    let dir = TempDir::new().unwrap();
    let s = load("quantum_free.toml", dir.path());
    assert_eq!(s.mode, Mode::Quantum);
    let report = run(&s).unwrap();
    let e = report.ehrenfest.unwrap();
    assert!(e.position <= 1e-8 && e.momentum <= 1e-8 && e.energy <= 1e-8, "{e:?}");
    let csv = fs::read_to_string(&s.output).unwrap();
    assert_eq!(csv.lines().count(), s.n_steps + 2);
    assert_eq!(csv.lines().next().unwrap(), hamflow::quantum::RECORD_CSV_HEADER);
}

#[test]
fn reference_and_gauge_modes_run() {
    let dir = TempDir::new().unwrap();
    for name in ["driven_reference.toml", "cyclotron.toml", "crossed_fields.toml", "optics_gradient.toml"] {
        let mut s = load(name, dir.path());
        s.n_steps = s.n_steps.min(500);
        let report = run(&s).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(report.rows, s.n_steps + 1);
        assert!(report.max_constraint <= 1e-9, "{name}: {}", report.max_constraint);
        let csv = fs::read_to_string(&s.output).unwrap();
        assert_eq!(csv.lines().count(), s.n_steps + 2, "{name}");
    }
}

#[test]
fn report_echoes_parameters() {
    let dir = TempDir::new().unwrap();
    let s = load("free_particle.toml", dir.path());
    let text = run(&s).unwrap().to_string();
    for key in ["mode = canonical4d", "c = 1", "hbar = 1", "mass = 1", "charge = 1", "rows = 101"] {
        assert!(text.lines().any(|l| l == key), "missing `{key}` in\n{text}");
    }
    assert!(text.lines().all(|l| l.contains(" = ")));
}

#[test]
fn binary_runs_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let src = fs::read_to_string(scenarios_dir().join("crossed_fields.toml")).unwrap();
    write(dir.path(), "s.toml", &src);
    let a = hamflow(&["simulate", "s.toml"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let first = fs::read(dir.path().join("crossed_fields.csv")).unwrap();
    let b = hamflow(&["simulate", "s.toml"], dir.path());
    assert!(b.status.success());
    assert_eq!(first, fs::read(dir.path().join("crossed_fields.csv")).unwrap());
    let stdout = String::from_utf8(a.stdout).unwrap();
    assert!(stdout.contains("max_constraint = "), "{stdout}");
}

#[test]
fn exit_code_validation() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.toml", "mode = \"gauge4d\"\ndt = 0.0\nn_steps = 5\noutput = \"x.csv\"\n[model]\nname = \"relativistic\"\n[initial]\nr = [0.0, 0.0, 0.0]\np = [1.0, 0.0, 0.0]\n");
    let out = hamflow(&["simulate", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dt must be positive"), "{err}");
    assert!(err.contains("[field]"), "{err}");
}

#[test]
fn exit_code_wrong_subcommand() {
    let dir = TempDir::new().unwrap();
    let src = fs::read_to_string(scenarios_dir().join("free_particle.toml")).unwrap();
    write(dir.path(), "s.toml", &src);
    assert_eq!(hamflow(&["quantum", "s.toml"], dir.path()).status.code(), Some(EXIT_VALIDATION));
}

#[test]
fn exit_code_io() {
    let dir = TempDir::new().unwrap();
    assert_eq!(hamflow(&["simulate", "missing.toml"], dir.path()).status.code(), Some(EXIT_IO));
    let src = fs::read_to_string(scenarios_dir().join("free_particle.toml")).unwrap();
    write(dir.path(), "s.toml", &src.replace("\"free_particle.csv\"", "\"no/such/dir/out.csv\""));
    assert_eq!(hamflow(&["simulate", "s.toml"], dir.path()).status.code(), Some(EXIT_IO));
}

#[test]
fn exit_code_domain_error_names_step() {
    // The ray runs into n(x) = 0 at x = 1.
    let dir = TempDir::new().unwrap();
    let text = r#"
mode = "canonical4d"
dt = 0.01
n_steps = 1000
output = "ray.csv"

[model]
name = "optics_ray"

[index]
kind = "linear_gradient"
n0 = 1.0
alpha = -1.0
direction = [1.0, 0.0, 0.0]

[initial]
r = [0.5, 0.0, 0.0]
p = [1.0, 0.0, 0.0]
"#;
    write(dir.path(), "ray.toml", text);
    let out = hamflow(&["simulate", "ray.toml"], dir.path());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(out.status.code(), Some(EXIT_RUNTIME), "{err}");
    assert!(err.contains("step "), "{err}");
}

#[test]
fn list_models() {
    let out = hamflow(&["list-models"], Path::new(env!("CARGO_MANIFEST_DIR")));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in hamflow_cli::scenario::MODEL_NAMES {
        assert!(text.contains(name));
    }
}
