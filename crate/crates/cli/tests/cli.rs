use std::path::Path;
use std::process::{Command, Output};

fn dcop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcop")).args(args).output().expect("spawn dcop")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn example_file(dir: &Path) -> String {
    let path = dir.join("example.json");
    let o = dcop(&["gen", "example", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_coloring_has_density_times_n_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let o = dcop(&["gen", "coloring", "--n", "10", "--density", "2", "--seed", "4", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&path);
    assert_eq!(v["agents"].as_u64().unwrap(), 10);
    assert_eq!(v["constraints"].as_array().unwrap().len(), 20);
}

#[test]
fn gen_meeting_one_unit_has_five_agents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let o = dcop(&["gen", "meeting", "--units", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(json(&path)["agents"].as_u64().unwrap(), 5);
}

#[test]
fn run_example_with_file_heuristics() {
    let dir = tempfile::tempdir().unwrap();
    let ex = example_file(dir.path());
    let o = dcop(&["run", &ex, "--heuristic", "file"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("problem,algorithm,variant_param,seed,cost,cycles,nccc,messages\n"));
    assert!(out.contains(",12,9,"), "{out}");

    let o = dcop(&["run", &ex, "--heuristic", "file", "--variant", "whm", "--w", "3", "--no-header"]);
    let out = stdout(&o);
    assert!(out.starts_with("example,bnb-adopt-whm,3,0,18,3,"), "{out}");
}

#[test]
fn nccc_t_changes_only_the_nccc_column() {
    let cols = |t: &str| -> Vec<String> {
        let o = dcop(&["run", "coloring:7:2:10000", "--seed", "3", "--nccc-t", t, "--no-header"]);
        assert!(o.status.success());
        stdout(&o).trim().split(',').map(String::from).collect()
    };
    let a = cols("0");
    let b = cols("5");
    for i in 0..a.len() {
        if i == 6 {
            assert!(b[i].parse::<u64>().unwrap() > a[i].parse::<u64>().unwrap());
        } else {
            assert_eq!(a[i], b[i], "column {i}");
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let args = ["run", "coloring:7:2:10000", "--seeds", "0..2", "--transport", "delay", "--max-delay", "4"];
    let a = dcop(&args);
    let b = dcop(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 5);
    assert!(stdout(&a).lines().last().unwrap().contains(",mean,"));
}

#[test]
fn csv_out_appends_with_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    for seed in ["1", "2"] {
        let o = dcop(&["run", "sensor:4", "--seed", seed, "--csv-out", csv.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text.matches("problem,").count(), 1);
}

#[test]
fn trace_written_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let ex = example_file(dir.path());
    let traces = dir.path().join("t");
    let o = Command::new(env!("CARGO_BIN_EXE_dcop"))
        .args(["run", &ex, "--heuristic", "file", "--trace"])
        .env("DCOP_TRACE_DIR", &traces)
        .output()
        .unwrap();
    assert!(o.status.success());
    let tsv = std::fs::read_to_string(traces.join("example-bnb-adopt-0.tsv")).unwrap();
    // header plus 4 agents over 9 cycles at least
    assert!(tsv.lines().count() >= 37);
}

#[test]
fn verify_and_replay_succeed() {
    let o = dcop(&["verify", "coloring:6:2:10000", "--seeds", "0..3", "--variant", "rem", "--p", "1.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = dcop(&["replay-paper"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("36 of 36"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dcop(&["run"]).status.code(), Some(64));
    assert_eq!(dcop(&["run", "x.json", "--variant", "nope"]).status.code(), Some(64));
    assert_eq!(dcop(&["--help"]).status.code(), Some(0));
    assert_eq!(dcop(&["run", "/nonexistent/p.json"]).status.code(), Some(4));

    let ex = example_file(dir.path());
    let o = dcop(&["run", &ex, "--cycle-cap", "3"]);
    assert_eq!(o.status.code(), Some(3));

    let bad = dir.path().join("bad.json");
    let mut v = json(Path::new(&ex));
    v["constraints"][0]["costs"][0][0] = serde_json::json!("inf");
    std::fs::write(&bad, v.to_string()).unwrap();
    let o = dcop(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_variant_parameter_is_a_usage_error() {
    assert_eq!(dcop(&["run", "sensor:4", "--variant", "aem"]).status.code(), Some(64));
    assert_eq!(dcop(&["run", "sensor:4", "--seeds", "5..2"]).status.code(), Some(64));
}
