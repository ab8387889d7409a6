use std::path::Path;
use std::process::{Command, Output};

fn rigidmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigidmd"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn rigidmd")
}

const CONFIG: &str = "format_version = 1
[system]
species = ar.species
counts = 108
temperature = 1.2
density = 0.6
seed = 5
[run]
dt = 0.002
equilibration_steps = 50
production_steps = 400
cutoff = 2.5
checkpoint_interval = 100
output = out
[sampling]
n_ext = 2
correlation_length = 20
massieu = true
rdf = true
rdf_stride = 20
self_diffusion = true
";

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ar.species"), "lj 0 0 0 1 1 1\n").unwrap();
    std::fs::write(dir.path().join("run.cfg"), config).unwrap();
    dir
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "dat"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn check_prints_effective_config_that_reparses_identically() {
    let ws = workspace(CONFIG);
    let cfg = ws.path().join("run.cfg");
    let first = rigidmd(&["check", arg(&cfg)]);
    assert_eq!(first.status.code(), Some(0));
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("thermostat_interval_production = 10"));
    assert!(!ws.path().join("out").exists(), "check must not simulate");

    let again = ws.path().join("again.cfg");
    std::fs::write(&again, &text).unwrap();
    let second = rigidmd(&["check", arg(&again)]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);
}

#[test]
fn invalid_config_exits_with_one_and_lists_all_errors() {
    let bad = CONFIG.replace("dt = 0.002", "dt = -1").replace("seed = 5", "seed = 5\nflavour = mint");
    let ws = workspace(&bad);
    let out = rigidmd(&["check", arg(&ws.path().join("run.cfg"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("flavour") && err.contains("time step"), "{err}");
}

#[test]
fn unknown_subcommand_exits_with_one_and_usage() {
    let out = rigidmd(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Usage"));
}

#[test]
fn version_reports_formats() {
    let out = rigidmd(&["version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("checkpoint format 1"));
}

#[test]
fn corrupt_checkpoint_is_a_runtime_error() {
    let ws = workspace(CONFIG);
    let ckpt = ws.path().join("bad.bin");
    std::fs::write(&ckpt, b"RIGIDMD\0garbage").unwrap();
    assert_eq!(rigidmd(&["restart", arg(&ckpt)]).status.code(), Some(2));
}

#[test]
fn run_then_restart_matches_uninterrupted_run() {
    let ws = workspace(CONFIG);
    let cfg = ws.path().join("run.cfg");
    let full = ws.path().join("full");
    let split = ws.path().join("split");

    let a = rigidmd(&["run", arg(&cfg), "--output", arg(&full)]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));

    let b = rigidmd(&["run", arg(&cfg), "--output", arg(&split), "--stop-after", "237"]);
    assert_eq!(b.status.code(), Some(0));
    assert!(!split.join("summary.dat").exists());
    let c = rigidmd(&["restart", arg(&split.join("checkpoint.bin"))]);
    assert_eq!(c.status.code(), Some(0), "{}", String::from_utf8_lossy(&c.stderr));

    let (x, y) = (read_dir_sorted(&full), read_dir_sorted(&split));
    let names: Vec<&str> = x.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"summary.dat") && names.contains(&"massieu.dat"));
    assert!(names.iter().any(|n| n.starts_with("rdf_")) && names.iter().any(|n| n.starts_with("acf_")));
    assert_eq!(x, y);
}
