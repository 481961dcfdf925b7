use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanet-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.conf");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_one_row_per_vehicle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sim(&[
        "run",
        "--condition",
        "no_event",
        "--vehicles",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let vehicles = fs::read_to_string(out.join("vehicles.csv")).unwrap();
    let ids: Vec<&str> = vehicles
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap())
        .collect();
    assert_eq!(ids, (0..10).map(|i| i.to_string()).collect::<Vec<_>>());
    let aggregate = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 2);
    assert!(aggregate
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("no_event,10,none,1,"));
}

#[test]
fn config_error_exits_nonzero_with_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[scenario]\ncondition = no_event\nhalt_duration = -5\n",
    );
    let o = sim(&[
        "run",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("halt_duration") && err.contains("line 3"),
        "{err}"
    );
}

#[test]
fn missing_config_file_exits_nonzero() {
    let o = sim(&["run", "--config", "/nonexistent/scenario.conf"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/scenario.conf"));
}

#[test]
fn incomplete_run_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[scenario]\nduration = 20\n");
    let o = sim(&[
        "run",
        "--config",
        &cfg,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    // Output is still written for inspection.
    assert!(dir.path().join("out/vehicles.csv").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[scenario]\ncondition = unannounced_event\nn_vehicles = 30\nseed = 9\n[trust]\nscheme = none\n",
    );
    let out = dir.path().join("out");
    let o = sim(&[
        "run",
        "--config",
        &cfg,
        "--condition",
        "trustworthy_announcement",
        "--vehicles",
        "10",
        "--scheme",
        "sender_side",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let aggregate = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(aggregate
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("trustworthy_announcement,10,sender_side,4,"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &str| {
        vec![
            "run",
            "--condition",
            "false_announcement",
            "--vehicles",
            "30",
            "--scheme",
            "receiver_side",
            "--out",
        ]
        .into_iter()
        .map(String::from)
        .chain([o.to_string()])
        .collect::<Vec<_>>()
    };
    for name in ["a", "b"] {
        let a = args(dir.path().join(name).to_str().unwrap());
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        assert!(sim(&a).status.success());
    }
    for file in [
        "vehicles.csv",
        "aggregate.csv",
        "summary.csv",
        "verdicts.csv",
    ] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap()
        );
    }
}

#[test]
fn matrix_filters_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sim(&[
        "matrix",
        "--scheme",
        "none",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let aggregate = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 1 + 4 * 3);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4 * 3);
}

#[test]
fn unknown_condition_is_rejected() {
    let o = sim(&["run", "--condition", "rush_hour"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("rush_hour"));
}
