//! End-to-end CLI tests: the exit-code contract (0 ok, 2 generation
//! failure, 3 instability, 4 non-convergence), byte determinism under
//! `--no-timing`, and one smoke run per subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mdot"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn mdot")
}

fn gen_instance(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let path = dir.join(name);
    let out = run(&[
        "gen",
        "--n",
        "8",
        "--m",
        "4",
        "--entropy",
        "0.5",
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "gen failed: {out:?}");
    path
}

#[test]
fn gen_is_deterministic_and_reports_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_instance(dir.path(), "a.bin", 7);
    let b = gen_instance(dir.path(), "b.bin", 7);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = gen_instance(dir.path(), "c.bin", 8);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn gen_unreachable_entropy_window_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--n",
        "64",
        "--m",
        "4",
        "--entropy",
        "0.5",
        "--entropy-tol",
        "1e-12",
        "--seed",
        "1",
        "--out",
        dir.path().join("x.bin").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {:?}", out.stderr);
}

#[test]
fn solve_writes_report_and_deterministic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "inst.bin", 21);
    let solve_once = |report: &str, trace: &str| {
        let out = run(&[
            "solve",
            "--instance",
            inst.to_str().unwrap(),
            "--gamma-bar",
            "32",
            "--T",
            "2",
            "--eps",
            "1e-10",
            "--proj",
            "pncg",
            "--no-timing",
            "--out",
            dir.path().join(report).to_str().unwrap(),
            "--trace",
            dir.path().join(trace).to_str().unwrap(),
        ]);
        assert!(out.status.success(), "solve failed: {out:?}");
    };
    solve_once("r1.json", "t1.csv");
    solve_once("r2.json", "t2.csv");
    let t1 = std::fs::read(dir.path().join("t1.csv")).unwrap();
    let t2 = std::fs::read(dir.path().join("t2.csv")).unwrap();
    assert_eq!(t1, t2, "trace CSV not byte-identical under --no-timing");
    let r1 = std::fs::read(dir.path().join("r1.json")).unwrap();
    let r2 = std::fs::read(dir.path().join("r2.json")).unwrap();
    assert_eq!(r1, r2, "report JSON not byte-identical under --no-timing");

    let report: serde_json::Value =
        serde_json::from_slice(&r1).expect("report parses as JSON");
    assert!(report["result"]["objective"].as_f64().unwrap() > 0.0);
    assert_eq!(report["config"]["schedule"].as_array().unwrap().len(), 2);
    let final_rho = report["result"]["final_rho"].as_f64().unwrap();
    assert!(final_rho <= 1e-10);

    let text = String::from_utf8(t1).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,k,rho,g,elapsed_s");
    assert!(lines.next().unwrap().starts_with("1,0,"));
}

#[test]
fn oversized_step_exits_3_and_split_schedule_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    // same instance the acceptance suite uses for the stability boundary
    let inst = gen_instance(dir.path(), "hard.bin", 13_000);
    let unstable = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--gamma-bar",
        "4096",
        "--T",
        "1",
        "--proj",
        "sinkhorn",
    ]);
    assert_eq!(unstable.status.code(), Some(3), "stderr: {:?}", unstable.stderr);
    let stderr = String::from_utf8_lossy(&unstable.stderr);
    assert!(
        stderr.contains("gamma_t = 4096"),
        "instability error must name the offending step size: {stderr}"
    );

    let stable = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--gamma-bar",
        "4096",
        "--T",
        "16",
        "--proj",
        "sinkhorn",
        "--out",
        dir.path().join("ok.json").to_str().unwrap(),
    ]);
    assert!(stable.status.success(), "stderr: {:?}", stable.stderr);
}

#[test]
fn iteration_cap_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "inst.bin", 33);
    let out = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--gamma-bar",
        "64",
        "--eps",
        "1e-12",
        "--proj",
        "sinkhorn",
        "--max-iters",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(4), "stderr: {:?}", out.stderr);
}

#[test]
fn sweep_produces_ordered_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    let summary = dir.path().join("summary.csv");
    let out = run(&[
        "sweep",
        "--n",
        "8",
        "--m",
        "4",
        "--entropies",
        "0.5",
        "--gamma-bars",
        "16,32",
        "--t-values",
        "1,auto",
        "--eps-values",
        "1e-8",
        "--projectors",
        "sinkhorn,pncg",
        "--instances",
        "2",
        "--seed",
        "5",
        "--no-timing",
        "--out",
        raw.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "sweep failed: {out:?}");
    let text = std::fs::read_to_string(&raw).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header + 1 entropy * 2 gammas * 2 T * 1 eps * 2 projectors * 2 instances
    assert_eq!(lines.len(), 1 + 16);
    for (i, line) in lines.iter().skip(1).enumerate() {
        assert!(line.starts_with(&format!("{i},")), "row order broken: {line}");
        assert!(line.contains(",ok,"), "cell failed: {line}");
    }
    let summary_text = std::fs::read_to_string(&summary).unwrap();
    // grouping is by resolved configuration: T=1 and T=auto coincide at
    // these budgets, so 2 gammas x 2 projectors remain
    assert_eq!(summary_text.lines().count(), 1 + 4);
}

#[test]
fn mnist_smoke_run_on_synthetic_idx_file() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("images.idx");
    // minimal valid IDX file: 8 patterned images
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    bytes.extend_from_slice(&8u32.to_be_bytes());
    bytes.extend_from_slice(&28u32.to_be_bytes());
    bytes.extend_from_slice(&28u32.to_be_bytes());
    for img in 0..8u32 {
        for p in 0..784u32 {
            bytes.push(((img * 37 + p * 11) % 251) as u8);
        }
    }
    std::fs::write(&idx, bytes).unwrap();

    let out_path = dir.path().join("pairs.csv");
    let out = run(&[
        "mnist",
        "--images",
        idx.to_str().unwrap(),
        "--pairs",
        "2",
        "--seed",
        "3",
        "--gamma-bar",
        "16",
        "--eps",
        "1e-6",
        "--no-timing",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "mnist failed: {out:?}");
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 2);
    assert!(lines[1].contains(",ok,"));
}

#[test]
fn verify_passes() {
    let out = run(&["verify", "--seed", "7"]);
    assert!(out.status.success(), "verify failed: {out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("descent-identity"));
    assert!(text.contains("all 10 checks passed"));
    assert!(!text.contains("FAIL"));
}
