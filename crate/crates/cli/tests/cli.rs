//! Command-level behavior: exit codes, file outputs, reproducibility.

use std::path::Path;

use mbrb_cli::commands::{
    cmd_boundary, cmd_run, cmd_sweep, BoundaryOptions, RunOptions, SweepOptions, EXIT_OK,
    EXIT_USAGE, EXIT_VIOLATION,
};

fn scenario_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn honest_scenario_passes_with_lambda_two() {
    let outcome = cmd_run(&scenario_path("honest_n4.toml"), &RunOptions::default());
    assert_eq!(outcome.exit_code, EXIT_OK, "{}", outcome.report);
    assert!(outcome.report.contains("lambda=2"), "{}", outcome.report);
    assert!(outcome.report.contains("result: pass"));
}

#[test]
fn bundled_scenarios_all_pass() {
    for name in [
        "honest_n4.toml",
        "equivocate_n4_async.toml",
        "static_d_n10.toml",
        "quiescent_after_tau.toml",
    ] {
        let outcome = cmd_run(&scenario_path(name), &RunOptions::default());
        assert_eq!(outcome.exit_code, EXIT_OK, "{name}: {}", outcome.report);
    }
}

#[test]
fn malformed_scenario_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "schema = \"mbrb-scenario/v1\"\nnot valid [").unwrap();
    let outcome = cmd_run(&path, &RunOptions::default());
    assert_eq!(outcome.exit_code, EXIT_USAGE);

    let missing = dir.path().join("missing.toml");
    let outcome = cmd_run(&missing, &RunOptions::default());
    assert_eq!(outcome.exit_code, EXIT_USAGE);
}

#[test]
fn truncated_run_fails_liveness() {
    let outcome = cmd_run(
        &scenario_path("honest_n4.toml"),
        &RunOptions {
            horizon: Some(1),
            ..RunOptions::default()
        },
    );
    assert_eq!(outcome.exit_code, EXIT_VIOLATION, "{}", outcome.report);
    assert!(outcome.report.contains("inconclusive"));
}

fn boundary_scenario_text() -> &'static str {
    // n = 3t + 2d exactly: the assumption fails, liveness is not owed.
    r#"
schema = "mbrb-scenario/v1"
master_seed = 1

[config]
n = 9
t = 1
d = 3

[drop_policy]
kind = "static_set"
victims = [1, 2, 3]

[[broadcast]]
sender = 0
payload = "m"
sn = 1

[[byzantine]]
id = 8
strategy = { kind = "silent" }
"#
}

#[test]
fn boundary_scenario_warns_and_proceeds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("boundary.toml");
    std::fs::write(&path, boundary_scenario_text()).unwrap();

    let outcome = cmd_run(&path, &RunOptions::default());
    assert_eq!(outcome.exit_code, EXIT_OK, "{}", outcome.report);
    assert!(
        outcome.report.contains("warning: resilience assumption violated"),
        "{}",
        outcome.report
    );

    // --allow-boundary silences the warning, same verdicts.
    let silenced = cmd_run(
        &path,
        &RunOptions {
            allow_boundary: true,
            ..RunOptions::default()
        },
    );
    assert_eq!(silenced.exit_code, EXIT_OK);
    assert!(!silenced.report.contains("warning:"));

    // --strict refuses to run it.
    let strict = cmd_run(
        &path,
        &RunOptions {
            strict: true,
            ..RunOptions::default()
        },
    );
    assert_eq!(strict.exit_code, EXIT_USAGE);
}

#[test]
fn run_outputs_are_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let outcome = cmd_run(
            &scenario_path("equivocate_n4_async.toml"),
            &RunOptions {
                out: Some(out.clone()),
                ..RunOptions::default()
            },
        );
        assert_eq!(outcome.exit_code, EXIT_OK);
    }
    for file in ["trace.jsonl", "report.txt"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical invocations");
    }
}

#[test]
fn seed_override_changes_async_traces() {
    let base = cmd_run(&scenario_path("equivocate_n4_async.toml"), &RunOptions::default());
    let reseeded = cmd_run(
        &scenario_path("equivocate_n4_async.toml"),
        &RunOptions {
            seed: Some(999),
            ..RunOptions::default()
        },
    );
    assert_eq!(reseeded.exit_code, EXIT_OK);
    assert_ne!(
        base.trace.unwrap().to_jsonl(),
        reseeded.trace.unwrap().to_jsonl()
    );
}

#[test]
fn small_sweep_is_clean_and_renders_rows() {
    let outcome = cmd_sweep(&SweepOptions {
        n_list: vec![4],
        seeds: 2,
        format: mbrb_cli::report::Format::Rows,
        ..SweepOptions::default()
    });
    assert_eq!(outcome.exit_code, EXIT_OK, "{}", outcome.report);
    assert!(outcome.report.contains("n=4 t=1 d=0"));
    assert!(outcome.report.contains("violations: 0"));
}

#[test]
fn empty_sweep_grid_is_ok() {
    let outcome = cmd_sweep(&SweepOptions {
        n_list: vec![],
        seeds: 1,
        ..SweepOptions::default()
    });
    assert_eq!(outcome.exit_code, EXIT_OK);
    assert!(outcome.cells.is_empty());
    assert!(outcome.report.contains("cells: 0"));
}

#[test]
fn sweep_marks_boundary_cells_unreachable() {
    let outcome = cmd_sweep(&SweepOptions {
        n_list: vec![5],
        seeds: 1,
        allow_boundary: true,
        ..SweepOptions::default()
    });
    assert!(
        outcome.report.contains("quorum unreachable"),
        "{}",
        outcome.report
    );
    // Boundary cells are reported, not counted as violations.
    assert_eq!(outcome.exit_code, EXIT_OK, "{}", outcome.report);
}

#[test]
fn boundary_command_rejects_degenerate_input() {
    let outcome = cmd_boundary(0, 0, &BoundaryOptions::default());
    assert_eq!(outcome.exit_code, EXIT_USAGE);
}

#[test]
fn boundary_command_writes_both_traces() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = cmd_boundary(
        1,
        1,
        &BoundaryOptions {
            out: Some(dir.path().to_path_buf()),
            ..BoundaryOptions::default()
        },
    );
    assert_eq!(outcome.exit_code, EXIT_OK, "{}", outcome.report);
    for file in ["boundary_trace.jsonl", "control_trace.jsonl", "report.txt"] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
}
