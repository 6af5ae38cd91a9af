use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

fn visnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_visnav")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim_end()).expect("stderr is one JSON object")
}

fn canonical() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/canonical.toml").display().to_string()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn build_graph_on_the_four_pose_example() {
    let dir = tempfile::tempdir().unwrap();
    let poses = dir.path().join("poses.json");
    std::fs::write(&poses, r#"{"positions": [[0, 0], [1, 0], [2, 0], [10, 0]]}"#).unwrap();
    let out = visnav(&[
        "build-graph",
        poses.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "graph.rho=1",
        "--override",
        "graph.phi_max=0.5",
    ]);
    ok(&out);
    let graph: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("graph.json"))).unwrap();
    let edges: BTreeSet<(u64, u64)> = graph["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["from"].as_u64().unwrap(), e["to"].as_u64().unwrap()))
        .collect();
    assert_eq!(edges, BTreeSet::from([(0, 1), (0, 2), (1, 2), (2, 3)]));
}

#[test]
fn record_then_build_graph() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&visnav(&["record", "--out", d]));
    let poses: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("poses.json"))).unwrap();
    let xs: Vec<f64> = poses["positions"].as_array().unwrap().iter().map(|p| p[0].as_f64().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*xs.last().unwrap(), 8.0 * 1.7);
    ok(&visnav(&["build-graph", dir.path().join("poses.json").to_str().unwrap(), "--out", d]));
    assert!(dir.path().join("graph.json").is_file());
}

#[test]
fn record_rejects_waypoint_inside_obstacle() {
    let dir = tempfile::tempdir().unwrap();
    let wp = dir.path().join("wp.json");
    std::fs::write(&wp, "[[0, 0], [4, 0.3], [8, 0]]").unwrap();
    let out = visnav(&[
        "record",
        "--waypoints",
        wp.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "world_file=missing.json",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let world = dir.path().join("world.json");
    let mut w = visnav_core::scenarios::corridor_world();
    w.obstacles.push(visnav_core::scenarios::target_obstacle());
    w.save(&world).unwrap();
    let out = visnav(&[
        "record",
        "--waypoints",
        wp.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        &format!("world_file={}", world.display()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "runtime");
    assert!(err["message"].as_str().unwrap().contains("infeasible waypoints"), "{err}");
}

#[test]
fn run_is_byte_identical_and_plots() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = canonical();
    for d in [&a, &b] {
        ok(&visnav(&["run", "--config", &cfg, "--seed", "3", "--override", "episode.max_steps=25", "--out", d.path().to_str().unwrap()]));
    }
    for f in ["trajectory.csv", "costs.csv", "metrics.json", "config.toml"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let traj = String::from_utf8(read(&a.path().join("trajectory.csv"))).unwrap();
    assert!(traj.starts_with("t,x,y,theta,v,w,event\n"));
    assert_eq!(traj.lines().count(), 26);
    let metrics: serde_json::Value = serde_json::from_slice(&read(&a.path().join("metrics.json"))).unwrap();
    assert_eq!(metrics["steps"], 25);

    // the saved config reproduces the run
    let c = tempfile::tempdir().unwrap();
    ok(&visnav(&["run", "--config", a.path().join("config.toml").to_str().unwrap(), "--out", c.path().to_str().unwrap()]));
    assert_eq!(read(&a.path().join("trajectory.csv")), read(&c.path().join("trajectory.csv")));

    // plot picks up config.toml from the run directory
    let p = tempfile::tempdir().unwrap();
    ok(&visnav(&["plot", a.path().to_str().unwrap(), "--out", p.path().to_str().unwrap()]));
    let dat = String::from_utf8(read(&p.path().join("trajectory.dat"))).unwrap();
    assert!(dat.starts_with("# trajectory: x y\n"));
    assert_eq!(dat.split("\n\n\n").next().unwrap().lines().count(), 1 + 1 + 25);
    let costs = String::from_utf8(read(&p.path().join("costs.dat"))).unwrap();
    assert_eq!(costs.lines().count(), 1 + 25);
}

#[test]
fn suite_structure() {
    let dir = tempfile::tempdir().unwrap();
    ok(&visnav(&[
        "suite",
        "--config",
        &canonical(),
        "--override",
        "episode.max_steps=15",
        "--override",
        "mppi.num_samples=64",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let report: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("suite.json"))).unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 9);
    let layout: Vec<serde_json::Value> = runs.iter().map(|r| r["perturbation"].clone()).collect();
    let expect: Vec<serde_json::Value> =
        [None, None, None, Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)].iter().map(|p| serde_json::json!(p)).collect();
    assert_eq!(layout, expect);
    for key in ["adc", "aic", "tdcr", "af", "grr"] {
        assert!(report["metrics"][key].is_number(), "{key}");
    }
}

#[test]
fn export_mask_writes_pgm_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = visnav(&["export-mask", "--config", &canonical(), "--pose", "3,-0.1,0.2", "--out", dir.path().to_str().unwrap()]);
    ok(&out);
    let mask = read(&dir.path().join("mask.pgm"));
    assert!(mask.starts_with(b"P5\n320 240\n255\n"));
    let parsed = visnav_core::traversability::read_pgm(&mask[..]).unwrap();
    assert!(parsed.count_traversable() > 0);
    let overlay = read(&dir.path().join("overlay.pgm"));
    assert_eq!(overlay.len(), mask.len());
    let info: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(info["subgoal"].is_array());
}

#[test]
fn errors_are_one_json_line_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: [(&[&str], i32, &str); 6] = [
        (&["run", "--override", "mppi.lambda=-1", "--out", d], 2, "config"),
        (&["run", "--override", "mppi.lamda=1", "--out", d], 2, "config"),
        (&["run", "--config", "/definitely/not/here.toml", "--out", d], 2, "config"),
        (&["frobnicate"], 2, "config"),
        (&["export-mask", "--pose", "1,2", "--out", d], 2, "config"),
        (&["run", "--override", "graph_file=/definitely/not/here.json", "--out", d], 3, "runtime"),
    ];
    for (args, code, kind) in cases {
        let out = visnav(args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err = stderr_json(&out);
        assert_eq!(err["error"], kind, "{args:?}");
        assert!(!err["message"].as_str().unwrap().is_empty());
    }
    let err = stderr_json(&visnav(&["run", "--override", "mppi.lambda=-1", "--out", d]));
    assert!(err["message"].as_str().unwrap().starts_with("mppi.lambda"));
}
