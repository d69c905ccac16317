//! End-to-end tests of the `degenwave` binary: exit codes, artifact shapes,
//! determinism, environment overrides.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_degenwave"))
}

static CASE: AtomicUsize = AtomicUsize::new(0);

/// Fresh scratch directory per test case.
fn scratch() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "degenwave-cli-{}-{}",
        std::process::id(),
        CASE.fetch_add(1, Ordering::Relaxed)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let out = dir.join("out");
    fs::write(
        &path,
        format!("{body}\n[output]\nout_dir = \"{}\"\n", out.display()),
    )
    .unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL: &str = "
[discretization]
wave_cells = 24
heat_cells = 16

[kernel]
history_nodes = 16

[evolution]
t_final = 0.2
";

/// Same mesh, pinned to uniform grading: the default graded mesh carries
/// under-resolved band-edge modes that contaminate spectral output.
const SMALL_G1: &str = "
[discretization]
wave_cells = 24
heat_cells = 16
wave_grading = 1.0

[kernel]
history_nodes = 16

[evolution]
t_final = 0.2
";

#[test]
fn check_reports_hypotheses_as_json() {
    let dir = scratch();
    let cfg = write_config(&dir, "");
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("JSON re-parses");
    assert_eq!(doc["coefficients"]["K_a"], 0.5);
    assert_eq!(doc["coefficients"]["condition1_holds"], true);
    assert_eq!(doc["kernel"]["rate"], 1.0);
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn out_of_range_m_exits_one_naming_key_and_range() {
    let dir = scratch();
    let cfg = write_config(&dir, "[discretization]\nm = 1.5\n");
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(msg.contains("'m'"), "stderr: {msg}");
    assert!(msg.contains("[0, 1]"), "stderr: {msg}");
}

#[test]
fn unknown_key_exits_one_naming_key() {
    let dir = scratch();
    let cfg = write_config(&dir, "[discretization]\nwave_cellz = 3\n");
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("wave_cellz"));
}

#[test]
fn missing_config_exits_one() {
    let out = run(&["check", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["simulate"]); // missing required --config
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_preset_trace_has_identically_zero_energy() {
    let dir = scratch();
    // SMALL ends inside [evolution], so the preset key lands there.
    let cfg = write_config(&dir, &format!("{SMALL}preset = \"zero\"\n"));
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(dir.join("out/trace.csv")).unwrap();
    assert!(!text.contains('\r'), "CSV must use \\n line endings");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,energy,dissipation,interface_trace,interface_flux"
    );
    for line in lines {
        let energy: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(energy, 0.0, "line {line}");
    }
}

#[test]
fn identical_config_gives_byte_identical_artifacts() {
    let dir = scratch();
    let cfg = write_config(&dir, SMALL);
    let cfg = cfg.to_str().unwrap();
    assert!(run(&["simulate", "--config", cfg]).status.success());
    let first_trace = fs::read(dir.join("out/trace.csv")).unwrap();
    assert!(run(&["resolvent", "--config", cfg]).status.success());
    let first_sweep = fs::read(dir.join("out/resolvent.csv")).unwrap();

    assert!(run(&["simulate", "--config", cfg]).status.success());
    assert!(run(&["resolvent", "--config", cfg]).status.success());
    assert_eq!(first_trace, fs::read(dir.join("out/trace.csv")).unwrap());
    assert_eq!(
        first_sweep,
        fs::read(dir.join("out/resolvent.csv")).unwrap()
    );
}

#[test]
fn env_var_overrides_out_dir() {
    let dir = scratch();
    let cfg = write_config(&dir, SMALL);
    let override_dir = dir.join("elsewhere");
    let out = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("DEGENWAVE_OUT", &override_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(override_dir.join("trace.csv").exists());
    assert!(!dir.join("out/trace.csv").exists());
}

#[test]
fn simulate_then_fit_round_trips_artifacts() {
    let dir = scratch();
    let cfg = write_config(&dir, SMALL);
    let cfg = cfg.to_str().unwrap();
    assert!(run(&["simulate", "--config", cfg]).status.success());
    assert!(run(&["fit", "--config", cfg]).status.success());

    let run_doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/run.json")).unwrap()).unwrap();
    let fit_doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/decay_fit.json")).unwrap()).unwrap();
    assert_eq!(run_doc["config_hash"], fit_doc["config_hash"]);
    assert!(fit_doc["rate"].is_f64()); // default decay kind is exponential
    assert!(fit_doc["r2"].is_f64());
    assert_eq!(fit_doc["window"].as_array().unwrap().len(), 2);
}

#[test]
fn spectrum_and_resolvent_artifacts_parse() {
    let dir = scratch();
    let cfg = write_config(&dir, SMALL_G1);
    let cfg = cfg.to_str().unwrap();

    assert!(run(&["spectrum", "--config", cfg]).status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/abscissa.json")).unwrap()).unwrap();
    assert!(doc["abscissa"].as_f64().unwrap() < 0.0);
    let eig = fs::read_to_string(dir.join("out/eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().next().unwrap(), "re,im");
    assert_eq!(
        eig.lines().count(),
        doc["dim"].as_u64().unwrap() as usize + 1
    );

    assert!(run(&["resolvent", "--config", cfg]).status.success());
    let sweep = fs::read_to_string(dir.join("out/resolvent.csv")).unwrap();
    assert_eq!(sweep.lines().next().unwrap(), "lambda,resolvent_norm");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/resolvent_fit.json")).unwrap())
            .unwrap();
    assert!(doc["exponent"].is_f64());
    assert!(doc["r2"].is_f64());
    assert_eq!(doc["window"][1], 1000.0);
}

#[test]
fn sweep_covers_the_m_grid_in_order() {
    let dir = scratch();
    let cfg = write_config(
        &dir,
        &format!("{SMALL_G1}\n[analysis]\nlambda_max = 30.0\nlambda_points = 6\nm_values = [0.0, 0.5, 1.0]\n"),
    );
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let csv = fs::read_to_string(dir.join("out/sweep.csv")).unwrap();
    let ms: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        ms,
        [
            "0.0000000000000000e0",
            "5.0000000000000000e-1",
            "1.0000000000000000e0"
        ]
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/sweep.json")).unwrap()).unwrap();
    assert_eq!(doc["results"].as_array().unwrap().len(), 3);
}
