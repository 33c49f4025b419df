use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mts_cli::error::CliError;
use mts_cli::experiment::{Algo, RunSpec};
use mts_cli::records::{CSV_COLUMNS, CSV_VERSION_LINE};
use mts_core::unfair::Subroutine;
use tempfile::TempDir;

fn mts(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mts"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn gen_random(dir: &Path, name: &str, seed: &str) {
    let out = mts(dir, &["gen", "--kind", "random", "--ell", "4", "--T", "200", "--seed", seed, "-o", name]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().skip(2).collect()
}

#[test]
fn coupon_generation_writes_instance_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = mts(
        dir.path(),
        &["gen", "--kind", "coupon", "--ell", "16", "--T", "2000", "--alpha", "0.1", "--seed", "7", "-o", "inst.json"],
    );
    assert_eq!(code(&out), 0);
    let (inst, traces) = mts_core::io::load_instance(&dir.path().join("inst.json")).unwrap();
    assert_eq!((inst.num_states(), inst.horizon(), traces.len()), (16, 2000, 16));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("inst.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["sigma_seq"].as_array().unwrap().len(), 2000);
}

#[test]
fn runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    gen_random(dir.path(), "inst.json", "3");
    let args = |o: &'static str| {
        vec![
            "run", "--algo", "combine", "--subroutine", "oddexponent", "--epsilon", "0.5", "--instance", "inst.json",
            "--trials", "50", "--seed", "1", "-o", o,
        ]
    };
    assert_eq!(code(&mts(dir.path(), &args("a.csv"))), 0);
    assert_eq!(code(&mts(dir.path(), &args("b.csv"))), 0);
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().next(), Some(CSV_VERSION_LINE));
    assert_eq!(a.lines().nth(1), Some(CSV_COLUMNS));
    let rows = body(&a);
    assert_eq!(rows.len(), 50);
    let trials: Vec<u64> = rows.iter().map(|r| r.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(trials, (0..50).collect::<Vec<_>>());
}

#[test]
fn master_seed_changes_results() {
    let dir = TempDir::new().unwrap();
    gen_random(dir.path(), "inst.json", "4");
    let run = |seed: &str| {
        let out = mts(
            dir.path(),
            &["run", "--algo", "bandit", "--subroutine", "share", "--epsilon", "1", "--instance", "inst.json", "--trials", "4", "--seed", seed],
        );
        assert_eq!(code(&out), 0);
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn rows_append_under_a_single_header() {
    let dir = TempDir::new().unwrap();
    gen_random(dir.path(), "inst.json", "1");
    for _ in 0..2 {
        let out = mts(dir.path(), &["run", "--epsilon", "1", "--instance", "inst.json", "--trials", "2", "-o", "out.csv"]);
        assert_eq!(code(&out), 0);
    }
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.matches(CSV_VERSION_LINE).count(), 1);
    assert_eq!(body(&csv).len(), 4);
    fs::write(dir.path().join("other.csv"), "something else\n").unwrap();
    let out = mts(dir.path(), &["run", "--epsilon", "1", "--instance", "inst.json", "-o", "other.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    gen_random(dir.path(), "inst.json", "2");
    fs::write(
        dir.path().join("cfg.json"),
        r#"{ "algo": "combine", "subroutine": "share", "epsilon": 0.5, "instances": ["inst.json"], "trials": 3, "seed": 9 }"#,
    )
    .unwrap();
    let out = mts(dir.path(), &["run", "--config", "cfg.json", "--trials", "2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = body(&text);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains("subroutine=share"));
    assert!(rows[0].contains("wiring=online"));

    fs::write(dir.path().join("bad.json"), r#"{ "epsilon": 0.5, "colour": "red" }"#).unwrap();
    assert_eq!(code(&mts(dir.path(), &["run", "--config", "bad.json", "--instance", "inst.json"])), 2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    gen_random(dir.path(), "inst.json", "2");
    let cases: [&[&str]; 6] = [
        &["run", "--instance", "inst.json"],
        &["run", "--epsilon", "1", "--instance", "missing.json"],
        &["run", "--epsilon", "1", "--instance", "inst.json", "--trials", "0"],
        &["run", "--algo", "bandit", "--subroutine", "oddexponent", "--epsilon", "1", "--instance", "inst.json"],
        &["run", "--algo", "bandit", "--gamma", "0.3", "--subroutine", "share", "--epsilon", "1", "--instance", "inst.json"],
        &["gen", "--kind", "nonsense", "--T", "3", "-o", "x.json"],
    ];
    for args in cases {
        assert_eq!(code(&mts(dir.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn exit_codes_by_error_kind() {
    assert_eq!(CliError::from(mts_core::Error::Contract("x".into())).exit_code(), 3);
    assert_eq!(CliError::from(mts_core::Error::InfeasibleTrajectory { t: 0 }).exit_code(), 3);
    assert_eq!(CliError::from(mts_core::Error::Structural("x".into())).exit_code(), 2);
    assert_eq!(CliError::VerifyFailed(String::new()).exit_code(), 1);
}

#[test]
fn bench_writes_json_and_csv() {
    let dir = TempDir::new().unwrap();
    gen_random(dir.path(), "inst.json", "8");
    let out = mts(dir.path(), &["bench", "--instance", "inst.json", "--m", "0,3", "--rho", "0,1", "-o", "b.json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert!(report["opt"].as_f64().unwrap() <= report["dyn"].as_f64().unwrap() + 1e-9);
    assert_eq!(report["dyn_m"].as_array().unwrap().len(), 2);
    let out = mts(dir.path(), &["bench", "--instance", "inst.json", "--m", "1", "-o", "b.csv"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.starts_with(mts_core::benchmarks::BENCHMARK_CSV_HEADER));
}

#[test]
fn sweep_covers_the_grid() {
    let dir = TempDir::new().unwrap();
    gen_random(dir.path(), "a.json", "1");
    gen_random(dir.path(), "b.json", "2");
    fs::write(
        dir.path().join("sweep.json"),
        r#"{ "instances": ["a.json", "b.json"], "algos": ["combine", "bandit"], "epsilons": [0.5, 1.0], "trials": 2, "seed": 3 }"#,
    )
    .unwrap();
    let out = mts(dir.path(), &["sweep", "--config", "sweep.json", "-o", "s.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    // Two instances, two trials, and (2 subroutines + bandit) x 2 epsilons.
    let rows = body(&csv);
    assert_eq!(rows.len(), 2 * 2 * 3 * 2);
    let keys: Vec<(String, u64)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].to_string(), f[3].parse().unwrap())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn kserver_generators_produce_runnable_instances() {
    let dir = TempDir::new().unwrap();
    for (kind, extra) in [("kserver-line", vec!["--k", "3"]), ("kserver-random", vec!["--k", "2", "--n", "5", "--ell", "3"])] {
        let mut args = vec!["gen", "--kind", kind, "--T", "12", "--seed", "4", "-o", "k.json"];
        args.extend(extra);
        assert_eq!(code(&mts(dir.path(), &args)), 0, "{kind}");
        let out = mts(dir.path(), &["run", "--epsilon", "1", "--instance", "k.json", "--trials", "2"]);
        assert_eq!(code(&out), 0, "{kind}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn verify_dp_oracle_passes() {
    let out = mts(Path::new("."), &["verify", "--suite", "dp-oracle"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("PASS dp-oracle"));
}

#[test]
fn run_spec_validation() {
    let spec = RunSpec {
        instances: vec!["a/x.json".into(), "b/x.json".into()],
        algo: Algo::Combine,
        subroutine: Subroutine::Share,
        epsilon: 1.0,
        gamma: None,
        wiring: None,
        r: None,
        m: None,
        rho: None,
        trials: 1,
        seed: 0,
    };
    assert!(matches!(spec.validate(), Err(CliError::Config(_))));
}
