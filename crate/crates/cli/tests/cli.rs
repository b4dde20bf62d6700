use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const ARCH: &str = "grid:2x1,2x2,1";
const GHZ5: &str = "OPENQASM 2.0;
include \"qelib1.inc\";
qreg q[5];
h q[0];
cx q[0], q[1];
cx q[1], q[2];
cx q[2], q[3];
cx q[3], q[4];
";

fn telesabre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_telesabre"))
        .args(args)
        .env("TELESABRE_LOG", "off")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn route_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "ghz5.qasm", GHZ5);
    let outputs: Vec<Vec<u8>> = (0..3)
        .map(|_| {
            let o = telesabre(&[
                "route",
                "--arch",
                ARCH,
                "--circuit",
                &circuit,
                "--seed",
                "7",
            ]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            o.stdout
        })
        .collect();
    assert!(!outputs[0].is_empty());
    assert!(outputs.iter().all(|o| o == &outputs[0]));
}

#[test]
fn verify_accepts_router_output() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "ghz5.qasm", GHZ5);
    let out = dir.path().join("out.json");
    let csv = dir.path().join("summary.csv");
    let o = telesabre(&[
        "route",
        "--arch",
        ARCH,
        "--circuit",
        &circuit,
        "--seed",
        "7",
        "--trials",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(&csv).unwrap();
    assert!(summary
        .starts_with("circuit,arch,seed,swaps,teledata,telegate,intercore_total,depth,runtime_ms"));
    let o = telesabre(&[
        "verify",
        "--arch",
        ARCH,
        "--circuit",
        &circuit,
        "--schedule",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn verify_rejects_a_tampered_schedule() {
    let dir = TempDir::new().unwrap();
    let circuit = write(&dir, "ghz5.qasm", GHZ5);
    let o = telesabre(&["route", "--arch", ARCH, "--circuit", &circuit]);
    let mut doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ops = doc["ops"].as_array_mut().unwrap();
    let at = ops.iter().position(|op| op["op"] == "local_gate").unwrap();
    ops.remove(at);
    let path = write(&dir, "bad.json", &doc.to_string());
    let o = telesabre(&[
        "verify",
        "--arch",
        ARCH,
        "--circuit",
        &circuit,
        "--schedule",
        &path,
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn deadlock_names_the_full_core() {
    // Three 4-qubit line cores; the middle core has one free qubit and the
    // outer cores are not linked.
    let dir = TempDir::new().unwrap();
    let arch = dir.path().join("line3.json");
    let o = telesabre(&[
        "gen-arch",
        "grid:3x1,1x4,1",
        "--out",
        arch.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let circuit = write(
        &dir,
        "pair.qasm",
        "OPENQASM 2.0;\nqreg q[5];\ncx q[0], q[1];\n",
    );
    let o = telesabre(&[
        "route",
        "--arch",
        arch.to_str().unwrap(),
        "--circuit",
        &circuit,
        "--layout",
        "1,9,4,5,6",
        "--max-stall",
        "50",
        "--release-valve",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("full cores [1]"), "{}", stderr(&o));
}

#[test]
fn oversubscribed_instance_is_infeasible() {
    let o = telesabre(&["route", "--arch", ARCH, "--circuit", "bench:ghz:8"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(telesabre(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        telesabre(&["route", "--arch", "nowhere", "--circuit", "bench:ghz:4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        telesabre(&["route", "--arch", ARCH, "--circuit", "bench:nope:4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        telesabre(&[
            "route",
            "--arch",
            ARCH,
            "--circuit",
            "bench:ghz:4",
            "--decay",
            "-1"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn oracle_reports_optimal_counts() {
    // q0 sits on comm 3 of core 0 and q1 is next to comm 6 of core 1: one
    // vacating swap plus one inter-core operation.
    let dir = TempDir::new().unwrap();
    let circuit = write(
        &dir,
        "pair.qasm",
        "OPENQASM 2.0;\nqreg q[2];\ncx q[0], q[1];\n",
    );
    let o = telesabre(&[
        "oracle",
        "--arch",
        ARCH,
        "--circuit",
        &circuit,
        "--layout",
        "3,4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["intercore"], 1);
    assert_eq!(doc["swaps"], 1);
    let o = telesabre(&[
        "oracle",
        "--arch",
        ARCH,
        "--circuit",
        &circuit,
        "--layout",
        "0,7",
        "--max-ops",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn bench_rows_are_sorted_and_complete() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let o = telesabre(&[
        "bench",
        "--arch",
        "grid:2x2,3x3,1",
        "--circuit",
        "bench:qft:8",
        "--circuit",
        "bench:ghz:8",
        "--seeds",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("bench:ghz:8") && rows[3].starts_with("bench:qft:8"));
    assert!(stderr(&o).contains("geometric mean"));
}

#[test]
fn generated_architecture_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("arch.json");
    let o = telesabre(&[
        "gen-arch",
        "grid:2x2,3x3,1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(Path::new(&path).is_file());
    let a = telesabre(&[
        "route",
        "--arch",
        path.to_str().unwrap(),
        "--circuit",
        "bench:qaoa:10:2",
        "--seed",
        "3",
    ]);
    let b = telesabre(&[
        "route",
        "--arch",
        "grid:2x2,3x3,1",
        "--circuit",
        "bench:qaoa:10:2",
        "--seed",
        "3",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
