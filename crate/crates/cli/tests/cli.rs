//! End-to-end checks of the installed binary: exit codes, file layout,
//! determinism, and the sweep plumbing. Physics accuracy lives in the core
//! crate's suites; here the bounds are loose sanity windows.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qarrive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qarrive"))
        .args(args)
        .output()
        .expect("binary must launch")
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (signal?)")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Cheap transit problem: coarser grid, shorter horizon than the default.
const QUICK: &str = "grid.n = 801\npropagation.t_final = 6\n";

#[test]
fn simulate_is_deterministic_across_reruns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), QUICK);
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");

    for dir in [&a, &b] {
        let out = qarrive(&["simulate", "--config", cfg, "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["trajectory.csv", "arrival.csv", "summary.csv"] {
        let left = fs::read(a.join(name)).unwrap();
        let right = fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
    // config.echo differs only in the output.dir override
    let echo = |p: &Path| {
        fs::read_to_string(p.join("config.echo"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("output.dir"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(echo(&a), echo(&b));
}

#[test]
fn echoed_config_reproduces_itself() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "grid.n = 801\npotential.kind = gaussian_barrier\npotential.height = 0.4\n\
         potential.center = 0\npotential.width = 2\npacket.k0 = 1.75\n\
         propagation.t_final = 6\n",
    );
    let first = tmp.path().join("first");
    let out = qarrive(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let echoed = first.join("config.echo");
    let second = tmp.path().join("second");
    let out = qarrive(&[
        "simulate",
        "--config",
        echoed.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    // the echo is canonical: feeding it back must reproduce it, except for
    // the output directory we just overrode
    let canon = |p: &Path| {
        fs::read_to_string(p.join("config.echo"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("output.dir"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(canon(&first), canon(&second));
}

#[test]
fn verify_passes_on_the_default_problem() {
    let tmp = TempDir::new().unwrap();
    let out = qarrive(&["verify", "--out", tmp.path().join("v").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("0 failed"), "verify output:\n{text}");
    assert!(tmp.path().join("v/verify.txt").exists());
}

#[test]
fn config_mistakes_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let cases: &[(&str, &str)] = &[
        ("unknown key", "grid.m = 3\n"),
        ("duplicate key", "mass = 1\nmass = 2\n"),
        ("bad number", "mass = heavy\n"),
        ("nonpositive mass", "mass = -1\n"),
        ("empty sweep values", "sweep.parameter = k0\nsweep.values =\n"),
        ("sweep values without parameter", "sweep.values = 1, 2\n"),
        ("interval with x_d", "detector.kind = interval\ndetector.x_d = 5\n"),
        ("step without edge", "potential.kind = step\npotential.center = 1\n"),
    ];
    for (label, text) in cases {
        let cfg = write_cfg(tmp.path(), text);
        let out = qarrive(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            tmp.path().join("out").to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 2, "case {label:?} should fail setup");
    }

    let out = qarrive(&["simulate", "--config", "/nonexistent/path.cfg"]);
    assert_eq!(code(&out), 2);

    // sweep config given to simulate, and simulate config given to sweep
    let cfg = write_cfg(tmp.path(), "sweep.parameter = k0\nsweep.values = 1, 2\n");
    let out = qarrive(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("s1").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let out = qarrive(&["sweep", "--out", tmp.path().join("s2").to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let cfg = write_cfg(tmp.path(), "sweep.parameter = k0\nsweep.values = 1\n");
    let out = qarrive(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("s3").to_str().unwrap(),
        "--workers",
        "0",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_writes_ordered_combined_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "grid.n = 801\npropagation.t_final = 12\nsweep.parameter = k0\nsweep.values = 1, 2, 4\n",
    );
    let parent = tmp.path().join("sweep");
    let out = qarrive(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        parent.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let combined = fs::read_to_string(parent.join("summary.csv")).unwrap();
    let lines: Vec<&str> = combined.lines().collect();
    assert_eq!(lines[0], "k0,peak_time,total_arrival,max_continuity_residual");
    assert_eq!(lines.len(), 4);

    let mut peaks = Vec::new();
    for (line, want_k0) in lines[1..].iter().zip(["1", "2", "4"]) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], want_k0, "rows must keep input order");
        peaks.push(fields[1].parse::<f64>().unwrap());
        let sub = parent.join(format!("k0={want_k0}"));
        assert!(sub.join("summary.csv").exists());
        assert!(sub.join("arrival.csv").exists());
    }
    // faster packets arrive earlier
    assert!((10.0..=13.0).contains(&peaks[0]), "k0=1 peak {}", peaks[0]);
    assert!((6.0..=8.0).contains(&peaks[1]), "k0=2 peak {}", peaks[1]);
    assert!((3.0..=4.5).contains(&peaks[2]), "k0=4 peak {}", peaks[2]);
    assert!(peaks[2] < peaks[1] && peaks[1] < peaks[0]);
}

#[test]
fn motionless_far_packet_registers_no_arrivals() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "grid.n = 801\npacket.k0 = 0\npropagation.t_final = 2\n");
    let dir = tmp.path().join("still");
    let out = qarrive(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let total: f64 = summary.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(total.abs() <= 1e-6, "phantom total arrival {total}");
}

#[test]
fn leftward_packet_completes_cleanly() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "grid.n = 801\npacket.k0 = -0.5\npropagation.t_final = 3\n");
    let out = qarrive(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("left").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn record_states_writes_one_snapshot_per_record() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "grid.n = 801\npropagation.t_final = 1\npropagation.record_every = 40\n",
    );
    let dir = tmp.path().join("snaps");
    let out = qarrive(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--record-states",
    ]);
    assert_eq!(code(&out), 0);
    let count = fs::read_dir(dir.join("states")).unwrap().count();
    // 200 steps recorded every 40, plus the initial state
    assert_eq!(count, 6);
}
