use std::path::Path;
use std::process::{Command, Output};

use viewplan::coordination::PlanResult;

fn viewplan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewplan"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn generate_plan_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = viewplan(&["generate", "corridor", "--seed", "12", "--out", "corridor.json"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = viewplan(
        &[
            "plan",
            "--scenario",
            "corridor.json",
            "--planner",
            "cocap",
            "--solver",
            "view-search",
            "--out",
            "plan.json",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = viewplan(&["validate", "--scenario", "corridor.json", "--plan", "plan.json"], d);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("conflict_free"));
    assert!(!stdout.contains("FAIL"));

    let mut plan = PlanResult::load(&d.join("plan.json")).unwrap();
    plan.total_reward *= 1.01;
    plan.save(&d.join("tampered.json")).unwrap();
    let o = viewplan(
        &["validate", "--scenario", "corridor.json", "--plan", "tampered.json"],
        d,
    );
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL  objective"));
}

#[test]
fn generator_parameters_can_be_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("p.json"), r#"{"corridor_width": 2, "robots": 3}"#).unwrap();
    let o = viewplan(&["generate", "corridor", "--params", "p.json", "--out", "c.json"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = viewplan::world::Scenario::load(d.join("c.json")).unwrap();
    assert_eq!(s.robots.len(), 3);

    std::fs::write(d.join("bad.json"), r#"{"corridor_wdth": 2}"#).unwrap();
    let o = viewplan(&["generate", "corridor", "--params", "bad.json", "--out", "c.json"], d);
    assert_ne!(code(&o), 0);
}

#[test]
fn bench_exit_code_reflects_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = viewplan(
        &[
            "bench",
            "--scenario",
            "corridor",
            "--seed",
            "12",
            "--gamma",
            "0.9",
            "--deterministic",
            "--out",
            "ok",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("ok/metrics.csv").exists());
    assert!(d.join("ok/trace_view-search_seed12.csv").exists());

    std::fs::write(
        d.join("p.json"),
        r#"{"map_width": 5, "map_height": 5, "obstacle_density": 0.4, "robots": 4, "actors": 2, "horizon": 5}"#,
    )
    .unwrap();
    let o = viewplan(
        &[
            "generate",
            "clutter",
            "--params",
            "p.json",
            "--seed",
            "2",
            "--out",
            "tight.json",
        ],
        d,
    );
    assert_eq!(code(&o), 0);
    let o = viewplan(
        &[
            "bench",
            "--scenario",
            "tight.json",
            "--planner",
            "cocap",
            "--node-budget",
            "25",
            "--out",
            "bad",
        ],
        d,
    );
    assert_eq!(code(&o), 2);
    let metrics = std::fs::read_to_string(d.join("bad/metrics.csv")).unwrap();
    assert!(metrics.lines().nth(1).unwrap().ends_with(",failure"));
}

#[test]
fn plan_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("p.json"),
        r#"{"map_width": 5, "map_height": 5, "obstacle_density": 0.4, "robots": 4, "actors": 2, "horizon": 5}"#,
    )
    .unwrap();
    viewplan(
        &[
            "generate", "clutter", "--params", "p.json", "--seed", "67", "--out", "s.json",
        ],
        d,
    );
    let o = viewplan(&["plan", "--scenario", "s.json", "--planner", "sequential"], d);
    assert_eq!(code(&o), 2);
    let plan = PlanResult::from_json(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert!(plan.failure.unwrap().contains("sequential planning failed"));
}

#[test]
fn unknown_names_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = viewplan(&["plan", "--scenario", "corridor", "--planner", "astar"], dir.path());
    assert_ne!(code(&o), 0);
    let o = viewplan(&["plan", "--scenario", "no-such-file.json"], dir.path());
    assert_eq!(code(&o), 1);
}
