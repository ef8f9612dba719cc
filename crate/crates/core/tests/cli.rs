use std::path::{Path, PathBuf};

use petricov::cli::{run_with, EXIT_DATA, EXIT_NOINPUT, EXIT_USAGE};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("petricov").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn fork_per_algorithm() {
    let f = data("fork.spec");
    let f = f.to_str().unwrap();
    assert_eq!(run(&["check", f, "--algo", "qcover"]).0, 0);
    assert_eq!(run(&["check", f, "--algo", "qcover"]).1, "safe\n");
    assert_eq!(run(&["check", f, "--algo", "backward"]).0, 0);
    let (code, out, _) = run(&["check", f, "--algo", "trapcegar"]);
    assert_eq!((code, out.as_str()), (3, "unknown\n"));
    assert_eq!(run(&["check", f, "--algo", "qreach-only"]).0, 0);
}

#[test]
fn unsafe_exit_code() {
    let g = data("grow.spec");
    for algo in ["backward", "qcover"] {
        let (code, out, _) = run(&["check", g.to_str().unwrap(), "--algo", algo]);
        assert_eq!((code, out.as_str()), (2, "unsafe\n"), "{algo}");
    }
}

#[test]
fn generated_instance_same_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..8 {
        let path = dir.path().join(format!("gen{seed}.spec"));
        let p = path.to_str().unwrap();
        let s = seed.to_string();
        let (code, _, _) = run(&["gen", "--places", "5", "--transitions", "5", "--seed", &s, "--out", p]);
        assert_eq!(code, 0);
        let a = run(&["check", p, "--algo", "backward"]).0;
        let b = run(&["check", p, "--algo", "qcover"]).0;
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn stats_json_is_reproducible() {
    let f = data("fork.spec");
    let f = f.to_str().unwrap();
    let (_, a, _) = run(&["check", f, "--stats", "-", "--no-timings"]);
    let (_, b, _) = run(&["check", f, "--stats", "-", "--no-timings"]);
    assert_eq!(a, b);
    let json = a.strip_prefix("safe\n").unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["schema"], "petricov-report/1");
    assert_eq!(v["algorithm"], "qcover");
    assert_eq!(v["verdict"], "safe");
    assert_eq!(v["stats"]["iterations"], 0);
    assert_eq!(v["stats"]["rejected_upfront"], true);
}

#[test]
fn emit_smt_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let f = data("fork.spec");
    let a = dir.path().join("a.smt2");
    let b = dir.path().join("b.smt2");
    for p in [&a, &b] {
        let (code, _, _) = run(&["check", f.to_str().unwrap(), "--emit-smt", p.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("(set-logic QF_LRA)\n"));
    assert!(text.ends_with("(check-sat)\n"));
    assert!(text.contains("(declare-fun x_p1 () Real)"));
}

#[test]
fn bench_rows() {
    let (code, out, _) = run(&["bench", data("").to_str().unwrap(), "--no-timings"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "name,algo,verdict,wall_ms,solver_ms,iterations,pruned_total,pruned_pct"
    );
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert_eq!(lines[1], "fork.spec,backward,safe,0,0,2,0,0.00");
    assert_eq!(lines[2], "fork.spec,qcover,safe,0,0,0,0,0.00");
    assert!(lines[3].starts_with("grow.spec,backward,unsafe,"));
    let (_, again, _) = run(&["bench", data("").to_str().unwrap(), "--no-timings"]);
    assert_eq!(out, again);
}

#[test]
fn bench_reports_broken_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.spec"), "vars p\nrules\n").unwrap();
    std::fs::copy(data("fork.spec"), dir.path().join("fork.spec")).unwrap();
    let (code, out, _) = run(&["bench", dir.path().to_str().unwrap(), "--algos", "qcover"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1], "bad.spec,qcover,error,0,0,0,0,0.00");
    assert!(lines[2].starts_with("fork.spec,qcover,safe,"));
}

#[test]
fn bench_timeout_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hard.spec");
    let (code, _, _) = run(&[
        "gen", "--places", "50", "--transitions", "50", "--density", "0.05", "--seed", "4", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let start = std::time::Instant::now();
    let (code, out, _) = run(&["bench", dir.path().to_str().unwrap(), "--algos", "backward", "--timeout", "1"]);
    assert_eq!(code, 0);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "unknown");
    let wall: u64 = row[3].parse().unwrap();
    assert!(wall <= 1500, "wall_ms {wall}");
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn gen_is_deterministic_and_parses() {
    let a = run(&["gen", "--places", "3", "--transitions", "4", "--seed", "7"]);
    let b = run(&["gen", "--places", "3", "--transitions", "4", "--seed", "7"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    let inst = petricov::Instance::parse(&a.1, petricov::Format::Mist).unwrap();
    assert_eq!(inst.net.num_places(), 3);
    assert_eq!(inst.net.num_transitions(), 4);
    let j = run(&["gen", "--places", "3", "--transitions", "4", "--seed", "7", "--format", "json"]);
    let back = petricov::Instance::parse(&j.1, petricov::Format::Json).unwrap();
    assert_eq!(back, inst);
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(run(&["check"]).0, EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&["check", "x.spec", "--algo", "nope"]).0, EXIT_USAGE);
    assert_eq!(run(&["gen", "--places", "0", "--transitions", "2"]).0, EXIT_USAGE);
    assert_eq!(run(&["gen", "--places", "2", "--transitions", "2", "--density", "2"]).0, EXIT_USAGE);
    assert_eq!(run(&["check", data("fork.spec").to_str().unwrap(), "--timeout", "-1"]).0, EXIT_USAGE);
    let (code, _, err) = run(&["check", "/nonexistent/x.spec"]);
    assert_eq!(code, EXIT_NOINPUT);
    assert!(err.contains("cannot read"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.spec");
    std::fs::write(&bad, "vars p\nrules\n  q >= 1 -> ;\ninit p = 0\ntarget p >= 1\n").unwrap();
    let (code, _, err) = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("bad.spec:"), "{err}");
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("check"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_petricov");
    let out = std::process::Command::new(bin)
        .args(["check", data("grow.spec").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "unsafe\n");
    let out = std::process::Command::new(bin).arg("check").output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}
