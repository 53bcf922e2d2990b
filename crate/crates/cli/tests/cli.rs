use std::fs;
use std::process::{Command, Output};

fn vlcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlcm")).args(args).output().expect("run vlcm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_sat_mode_on_2795() {
    let o = vlcm(&["solve", "--mode", "sat", "-w", "3", "--targets", "2795"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("4 total adders"), "{}", stdout(&o));
}

#[test]
fn enumerate_counts_covers() {
    let o = vlcm(&["enumerate", "-w", "5", "--encoding", "csd", "--targets", "75", "--count-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("10 pattern sets"), "{}", stdout(&o));
    let o = vlcm(&["enumerate", "-w", "5", "--encoding", "csd", "--targets", "75"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("10 pattern sets"), "{}", stdout(&o));
}

#[test]
fn solved_graphs_verify() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    let g = g.to_str().unwrap();
    for mode in ["chunk", "sat", "enumerate"] {
        let o = vlcm(&["solve", "--mode", mode, "-w", "4", "--reconstruct", "sat", "--targets", "11,93", "--out", g]);
        assert_eq!(o.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(vlcm(&["verify", g, "--targets", "11,93"]).status.code(), Some(0), "{mode}");
        assert_eq!(vlcm(&["verify", g, "--targets", "11,95"]).status.code(), Some(1), "{mode}");
    }
}

#[test]
fn dot_and_csv_output() {
    let o = vlcm(&["solve", "--targets", "60375", "--format", "dot"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("digraph"));
    let o = vlcm(&["solve", "--targets", "60375", "--format", "csv"]);
    let text = stdout(&o);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("instance,flow,w,total_adders,bit_adders"), "{header}");
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn malformed_instance_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    fs::write(&p, "# bad\n17\nseventeen\n").unwrap();
    let o = vlcm(&["solve", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn invalid_input_exits_one() {
    assert_eq!(vlcm(&["solve", "--targets", "0"]).status.code(), Some(1));
    assert_eq!(vlcm(&["solve", "--targets", "12", "-w", "0"]).status.code(), Some(1));
    assert_eq!(vlcm(&["solve", "--targets", "12", "--mode", "sat", "--encoding", "csd"]).status.code(), Some(1));
    assert_eq!(vlcm(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(vlcm(&["solve"]).status.code(), Some(1));
}

#[test]
fn missing_external_solver_is_internal_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_vlcm"))
        .args(["solve", "--mode", "sat", "-w", "3", "--targets", "2795"])
        .env("VLCM_SAT_SOLVER", "/nonexistent/solver")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_random_is_deterministic_and_round_trips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = vlcm(&["gen-random", "--seed", "9", "--widths", "32", "--per-width", "2", "--count", "3", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2);
    for n in &names {
        let x = fs::read(a.path().join(n)).unwrap();
        assert_eq!(x, fs::read(b.path().join(n)).unwrap());
        let o = vlcm(&["solve", a.path().join(n).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
}

#[test]
fn bench_writes_one_row_per_instance_and_flow() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = vlcm(&[
        "bench", "--random", "--seed", "1", "--widths", "32", "--per-width", "2", "--count", "3", "--flows", "chunk,csd",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn decompose_chunk_json() {
    let o = vlcm(&["decompose", "--targets", "60375", "-w", "4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.is_object());
    let o = vlcm(&["decompose", "--targets", "60375", "-w", "4", "--encoding", "csd"]);
    assert!(stdout(&o).contains("3 unique: {1, 5, 9}"), "{}", stdout(&o));
}
