use std::path::Path;

use fermi_bouncer::manifest::MANIFEST_FILE;
use fermi_bouncer::sweep::AGGREGATE_FILE;
use fermi_bouncer::{analyze, parse_config, run_in, sweep, RunOutcome, RunStatus};

const QUANTUM: &str = r#"
name = "small-quantum"

[physics.scaled]
v0 = 1.0
kappa = 1.0
lambda = 1.7
kbar = 1.0

[dynamics.quantum]
auto_step = false
step = 0.002

[grid]
z_min = -10.0
z_max = 60.0
n_points = 1024

[initial.wavepacket]
center_z = 2.0
center_p = 5.0

[schedule]
t_end = 2.0
sample_every = 0.05
snapshots = [1.0]
"#;

const CLASSICAL: &str = r#"
name = "small-classical"
pipeline = "classical"
seed = 5

[physics.scaled]
v0 = 1.0
kappa = 1.0
lambda = 1.7
kbar = 1.0

[dynamics.classical]
backend = "hard-wall"

[initial.ensemble]
mean_z = 0.5
n = 300

[schedule]
t_end = 60.0
sample_every = 1.0
"#;

fn config(text: &str, dir: &Path, extra: &[&str]) -> fermi_bouncer::RunConfig {
    let mut set: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    set.push(format!("output_dir=\"{}\"", dir.display()));
    parse_config(text, &set).unwrap()
}

#[test]
fn quantum_run_writes_verified_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("q");
    let c = config(QUANTUM, &out, &[]);
    let outcome = run_in(&c, &out, false).unwrap();
    assert!(matches!(outcome, RunOutcome::Completed(_)));
    let m = outcome.manifest();
    assert_eq!(m.status, RunStatus::Complete);
    assert_eq!(m.steps, 1000);
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    for want in [
        "config.toml",
        "quantum_series.dat",
        "quantum_p_marginal_000.dat",
        "quantum_p_marginal_001.dat",
        "psi_001.bin",
        "quantum_analysis.txt",
    ] {
        assert!(names.contains(&want), "missing {want}: {names:?}");
    }
    m.verify(&out).unwrap();
    let kv = analyze::analyze_dir(&out).unwrap();
    assert_eq!(kv.get("checksums"), Some("verified"));
    assert!((kv.get_f64("quantum.final_norm").unwrap() - 1.0).abs() < 1e-9);
    // No leftover staging directories.
    let entries: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn identical_config_is_a_no_op() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let c = config(CLASSICAL, &out, &[]);
    let first = run_in(&c, &out, false).unwrap();
    let stamp = std::fs::metadata(out.join(MANIFEST_FILE)).unwrap().modified().unwrap();
    let second = run_in(&c, &out, false).unwrap();
    assert!(matches!(second, RunOutcome::Unchanged(_)));
    assert_eq!(first.manifest(), second.manifest());
    assert_eq!(std::fs::metadata(out.join(MANIFEST_FILE)).unwrap().modified().unwrap(), stamp);
    let forced = run_in(&c, &out, true).unwrap();
    assert!(matches!(forced, RunOutcome::Completed(_)));
    assert_eq!(forced.manifest().summary, first.manifest().summary);
}

#[test]
fn different_config_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    run_in(&config(CLASSICAL, &out, &[]), &out, false).unwrap();
    let other = config(CLASSICAL, &out, &["seed=6"]);
    assert!(run_in(&other, &out, false).unwrap_err().to_string().contains("--force"));
    assert!(run_in(&other, &out, true).unwrap().succeeded());
}

#[test]
fn divergent_run_is_recorded_as_failed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    // A box far too short for the launch: probability reaches the top edge.
    let c = config(QUANTUM, &out, &["grid.z_max=20.0", "grid.n_points=512", "schedule.t_end=4.0"]);
    let outcome = run_in(&c, &out, false).unwrap();
    let m = outcome.manifest();
    assert_eq!(m.status, RunStatus::Failed);
    assert!(!outcome.succeeded());
    assert!(m.error.as_deref().unwrap().contains("top of the box"), "{:?}", m.error);
    let series = m.artifacts.iter().find(|a| a.path == "quantum_series.dat").unwrap();
    assert!(series.partial);
    assert!(m.artifacts.iter().any(|a| a.path == "psi_at_failure.bin"));
    m.verify(&out).unwrap();
}

#[test]
fn oversized_step_fails_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("h");
    let c = config(
        CLASSICAL,
        &out,
        &[
            "physics.scaled.kappa=50.0",
            "dynamics.classical.backend=\"smooth\"",
            "dynamics.classical.h=5.0",
            "dynamics.classical.max_depth=0",
        ],
    );
    let outcome = run_in(&c, &out, false).unwrap();
    assert_eq!(outcome.manifest().status, RunStatus::Failed, "{:?}", outcome.manifest().summary);
    let err = outcome.manifest().error.as_deref().unwrap();
    assert!(err.contains("diverged"), "{err}");
    assert!(outcome.manifest().artifacts.iter().filter(|a| a.path != "config.toml").all(|a| a.partial));
}

#[test]
fn tampering_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let m = run_in(&config(CLASSICAL, &out, &[]), &out, false).unwrap().manifest().clone();
    let path = out.join("classical_trace.dat");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push('\n');
    std::fs::write(&path, text).unwrap();
    assert!(m.verify(&out).is_err());
    assert!(analyze::analyze_dir(&out).is_err());
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{CLASSICAL}\n[sweep]\npath = \"physics.scaled.lambda\"\nvalues = [0.1, 1.7, 2.4]\n");
    let a = config(&text, &tmp.path().join("one"), &[]);
    let b = config(&text, &tmp.path().join("four"), &[]);
    let ra = sweep(&a, 1, false).unwrap();
    let rb = sweep(&b, 4, false).unwrap();
    assert!(ra.all_succeeded());
    let bytes = |r: &fermi_bouncer::SweepResult| std::fs::read(r.dir.join(AGGREGATE_FILE)).unwrap();
    assert_eq!(bytes(&ra), bytes(&rb));
    assert_eq!(ra.aggregate.get("value").unwrap(), &[0.1, 1.7, 2.4]);
    assert_eq!(ra.aggregate.get("window_twice_s").unwrap(), &[-1.0, 1.0, -1.0]);
}

#[test]
fn single_value_sweep_matches_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{CLASSICAL}\n[sweep]\npath = \"physics.scaled.lambda\"\nvalues = [1.7]\n");
    let s = sweep(&config(&text, &tmp.path().join("s"), &[]), 1, false).unwrap();
    let out = tmp.path().join("r");
    let r = run_in(&config(CLASSICAL, &out, &[]), &out, false).unwrap();
    let child = fermi_bouncer::RunManifest::read(&s.dir.join("runs/000")).unwrap();
    assert_eq!(child.summary, r.manifest().summary);
    let trace = |d: &Path| std::fs::read(d.join("classical_trace.dat")).unwrap();
    assert_eq!(trace(&s.dir.join("runs/000")), trace(&out));
}
