use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gasper-lab"));
    cmd.env_remove("GASPER_LAB_SEED");
    cmd
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn targeted_budget_for_ten_blocks() {
    assert_eq!(stdout(&run(&["calc", "budget-targeted", "--k", "10"])).trim(), "19");
    assert_eq!(
        stdout(&run(&["calc", "budget-refined", "--k", "2", "--w-honest", "109"])).trim(),
        "110"
    );
    assert_eq!(
        stdout(&run(&["calc", "listening-time", "--k", "5", "--variant", "probabilistic"])).trim(),
        "24"
    );
}

#[test]
fn selection_probs_defaults() {
    let text = stdout(&run(&["calc", "selection-probs"]));
    assert!(text.contains("p_proposer: 0.99810"), "{text}");
    assert!(text.contains("p_committee: 0.99825"), "{text}");
    assert!(text.contains("p_joint: 0.99635"), "{text}");
}

#[test]
fn trace_fixture_median() {
    let fixture = repo("crates/core/tests/fixtures/four_delays.csv");
    let text = stdout(&run(&["analyze-trace", "--trace", fixture.to_str().unwrap(), "--sender", "0"]));
    assert!(text.lines().any(|l| l == "median_ms: 20"), "{text}");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo("configs/refined.json");
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        stdout(&run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
        files.push(fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().skip(1).all(|l| l.starts_with("refined_reorg,1,,")));
}

#[test]
fn seed_flag_beats_environment() {
    let config = repo("configs/refined.json");
    let with_flag = bin()
        .args(["simulate", "--config", config.to_str().unwrap(), "--trials", "1", "--seed", "4"])
        .env("GASPER_LAB_SEED", "9")
        .output()
        .unwrap();
    let from_env = bin()
        .args(["simulate", "--config", config.to_str().unwrap(), "--trials", "1"])
        .env("GASPER_LAB_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(stdout(&with_flag), stdout(&from_env));
}

#[test]
fn dumped_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dumped = dir.path().join("dumped.json");
    let config = repo("configs/combined.json");
    stdout(&run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--dump-config",
        "--out",
        dumped.to_str().unwrap(),
    ]));
    let again = dir.path().join("again.json");
    stdout(&run(&[
        "simulate",
        "--config",
        dumped.to_str().unwrap(),
        "--dump-config",
        "--out",
        again.to_str().unwrap(),
    ]));
    assert_eq!(fs::read(&dumped).unwrap(), fs::read(&again).unwrap());
    let a = stdout(&run(&["simulate", "--config", config.to_str().unwrap()]));
    let b = stdout(&run(&["simulate", "--config", dumped.to_str().unwrap()]));
    assert_eq!(a, b);
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"params": {"beta": 3}}"#, "params.beta"),
        (r#"{"strategy": {"kind": "refined_reorg", "k": 0}, "adversary": {"kind": "fraction"}, "params": {"beta": 0.2}}"#, "strategy.k"),
        (r#"{"trials": 0}"#, "trials"),
        (r#"{"horizon": 10, "colour": 1}"#, "colour"),
    ];
    for (i, (json, field)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        fs::write(&path, json).unwrap();
        let out = run(&["simulate", "--config", path.to_str().unwrap()]);
        assert!(!out.status.success(), "{json} accepted");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{json}: {err}");
    }
}

#[test]
fn sweep_finds_the_median() {
    let config = repo("configs/balancing.json");
    let text = stdout(&run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--trials",
        "2",
        "--horizon",
        "100",
        "--t-delay-min",
        "90",
        "--t-delay-max",
        "110",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_delay_ms,mean_stall_slots,trials"));
    let best = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse::<u64>().unwrap(), f[1].parse::<f64>().unwrap())
        })
        .fold((0, f64::MIN), |b, p| if p.1 > b.1 { p } else { b });
    assert_eq!(best.0, 100, "{text}");
}

#[test]
fn sweep_rejects_other_strategies() {
    let config = repo("configs/refined.json");
    let out = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("strategy"));
}

#[test]
fn generated_trace_is_analyzable() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    stdout(&run(&[
        "gen-trace",
        "--median-ms",
        "100",
        "--nodes",
        "101",
        "--messages",
        "5",
        "--seed",
        "3",
        "--out",
        trace.to_str().unwrap(),
    ]));
    let text = stdout(&run(&["analyze-trace", "--trace", trace.to_str().unwrap(), "--sender", "0"]));
    assert!(text.contains("messages: 5"), "{text}");
    let median: u64 = text
        .lines()
        .find_map(|l| l.strip_prefix("median_ms: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((90..=110).contains(&median), "{median}");
}
