use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowregret")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn simulate_golden() {
    let got = stdout(&["simulate", "--model", "polya", "--adversary", "flip", "--horizon", "64", "--trials", "2"]);
    let want = "\
trial,seed,model,adversary,T,regret,switched,switch_time
0,0,polya,flip,64,0.048349,0,
1,0,polya,flip,64,0.048349,0,
mean,0,polya,flip,64,0.048349,0.000000,
ci95,0,polya,flip,64,0.000000,,
";
    assert_eq!(got, want);
}

#[test]
fn tv_golden() {
    let got = stdout(&["tv", "--p", "robust(bernoulli)", "--q", "bernoulli", "--horizon", "8"]);
    assert_eq!(got, "P,Q,T,method,value,ci\n\"robust(bernoulli,U=match)\",bernoulli,8,exact,0.000000,0.000000\n");
}

#[test]
fn dataset_golden() {
    let got = stdout(&[
        "dataset",
        "--model",
        "bernoulli",
        "--n-base",
        "2",
        "--n-polya",
        "2",
        "--horizon",
        "16",
        "--alpha-mask",
        "0.5",
        "--seed",
        "1",
    ]);
    let lines: Vec<&str> = got.lines().collect();
    assert_eq!(lines[0], r#"{"seq":"0000010011110010","mask_from":null,"source":"base"}"#);
    assert_eq!(lines[2], r#"{"seq":"0000000100000000","mask_from":6,"source":"polya"}"#);
    assert_eq!(lines.len(), 4);
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "simulate",
        "--model",
        "robust(bernoulli)",
        "--adversary",
        "env(bernoulli)",
        "--horizon",
        "128",
        "--trials",
        "8",
        "--seed",
        "5",
    ];
    assert_eq!(stdout(&args), stdout(&args));
    let tv = [
        "tv",
        "--p",
        "polya",
        "--q",
        "drift(phi=0.3)",
        "--horizon",
        "12",
        "--method",
        "mc",
        "--samples",
        "500",
        "--seed",
        "2",
    ];
    assert_eq!(stdout(&tv), stdout(&tv));
}

#[test]
fn flags_override_config_file() {
    let cfg = scratch("override.cfg");
    std::fs::write(&cfg, "# experiment\nmodel = polya\nadversary = const(1)\nhorizon = 32\ntrials = 3\n").unwrap();
    let got = stdout(&["simulate", "--config", cfg.to_str().unwrap(), "--adversary", "flip"]);
    let rows: Vec<&str> = got.lines().collect();
    assert_eq!(rows.len(), 1 + 3 + 2);
    assert!(rows[1].starts_with("0,0,polya,flip,32,"));
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("sim.csv");
    let printed = run(&["simulate", "--horizon", "16", "--trials", "1", "--out", path.to_str().unwrap()]);
    assert!(printed.status.success());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("trial,seed,model,adversary,T,regret,switched,switch_time\n"));
}

#[test]
fn parse_errors_exit_2_with_position() {
    let out = run(&["simulate", "--model", "robust(bernoulli,alpah=1)"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("column 18"), "{err}");

    let cfg = scratch("bad.cfg");
    std::fs::write(&cfg, "model = polya\nhorizon = ten\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn budget_errors_exit_3() {
    let out = run(&["tv", "--p", "polya", "--q", "bernoulli", "--horizon", "40", "--method", "exact"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn impossibility_csv_shape() {
    let got = stdout(&["impossibility", "-L", "4", "--trials", "200"]);
    let rows: Vec<&str> = got.lines().collect();
    assert_eq!(rows[0], "candidate,tv_lb,regret_vs_M1,sum");
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("\"debruijn(L=4,flip=0,eps=0)\",0.000000,"));
}
