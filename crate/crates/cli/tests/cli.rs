use std::path::Path;
use std::process::{Command, Output};

fn fsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn synth_then_analyze_writes_report_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tg.json");
    let out = fsm(&[
        "synth",
        "tailgate",
        "--gap",
        "0.5",
        "--duration",
        "0.3",
        "--out",
        &s(&scenario),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report = dir.path().join("report.json");
    let svg = dir.path().join("svg");
    let pgm = dir.path().join("pgm");
    let out = fsm(&[
        "analyze",
        "--scenario",
        &s(&scenario),
        "--render",
        &s(&svg),
        "--pgm",
        &s(&pgm),
        "--out",
        &s(&report),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["frames"].as_array().unwrap().len(), 3);
    assert_eq!(json["ego_lane_restriction"], "unrestricted");
    assert!(json["metrics"]["frame_violation_rate"].is_number());
    assert!(svg.join("t000100ms.svg").exists());
    assert!(pgm.join("t000200ms_drivable_h.pgm").exists());
}

#[test]
fn ego_in_lane_flag_reaches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tg.json");
    assert!(fsm(&[
        "synth",
        "tailgate",
        "--duration",
        "0.1",
        "--out",
        &s(&scenario)
    ])
    .status
    .success());
    let report = dir.path().join("r.json");
    let out = fsm(&[
        "analyze",
        "--scenario",
        &s(&scenario),
        "--ego-in-lane",
        "--seed",
        "3",
        "--out",
        &s(&report),
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["ego_lane_restriction"], "in_lane");
    assert_eq!(json["seed"], 3);
}

#[test]
fn sweep_prints_csv_rows_per_value_and_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(fsm(&[
        "synth",
        "tailgate",
        "--gap",
        "0.5",
        "--duration",
        "0.2",
        "--out",
        &s(&a)
    ])
    .status
    .success());
    assert!(fsm(&[
        "synth",
        "tailgate",
        "--gap",
        "1.5",
        "--duration",
        "0.2",
        "--name",
        "follower",
        "--out",
        &s(&b)
    ])
    .status
    .success());
    let out = fsm(&[
        "sweep",
        "--param",
        "a_min",
        "--values",
        "-4",
        "-7.3",
        "--scenario",
        &s(&a),
        "--scenario",
        &s(&b),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,value,agent,frame_violation_rate");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("a_min,-4,tailgate-gap0.5s,"));
    assert!(lines[4].starts_with("a_min,-7.3,follower,"));
}

#[test]
fn exit_codes_distinguish_validation_and_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "timeline": "x"}"#).unwrap();
    let out = fsm(&[
        "analyze",
        "--scenario",
        &s(&bad),
        "--out",
        &s(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let scenario = dir.path().join("tg.json");
    assert!(fsm(&[
        "synth",
        "tailgate",
        "--duration",
        "0.1",
        "--out",
        &s(&scenario)
    ])
    .status
    .success());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"assumptions": {"horizon": 4.05}}"#).unwrap();
    let out = fsm(&[
        "analyze",
        "--scenario",
        &s(&scenario),
        "--config",
        &s(&cfg),
        "--out",
        &s(&dir.path().join("r.json")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = fsm(&[
        "sweep",
        "--param",
        "nope",
        "--values",
        "1",
        "--scenario",
        &s(&scenario),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = fsm(&[
        "synth",
        "sdli",
        "--cut-in-time",
        "-1",
        "--out",
        &s(&dir.path().join("x.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
