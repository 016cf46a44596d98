use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coupled-crn"));
    c.env_remove("COUPLED_CRN_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn check_reports_example1_compliance() {
    let o = run(&["check", "example1.json", "--theta", "2,1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("compliant, P_set={1}, p=2"), "{}", stdout(&o));
}

#[test]
fn check_reports_explosive_reason() {
    let o = run(&["check", "explosive.json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("non-compliant"));
    assert!(text.contains("population-increasing reaction of order ≥ 2"));
}

#[test]
fn check_reads_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dimer.json");
    std::fs::write(
        &path,
        r#"{"species":["A","B"],"theta":[1.5],"reactions":[{"source":{"A":2},"product":{"B":1},"rate":{"param":0}}]}"#,
    )
    .unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("compliant, P_set={}, p=2"), "{}", stdout(&o));
}

#[test]
fn exit_codes_follow_error_categories() {
    assert_eq!(run(&["simulate", "--model", "example1"]).status.code(), Some(2));
    assert_eq!(run(&["check", "no_such_model"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"species\": [\"A\"],\n \"theta\": [-1], \"reactions\": []}").unwrap();
    let o = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta[0]"));
    let o = run(&["simulate", "--model", "explosive", "--t-end", "10", "--max-events", "500"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["couple", "--model", "example1", "--eps", "7:0.1", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["couple", "--model", "circadian", "--eps", "1:1", "--method", "split", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = run(&[
        "simulate", "--model", "birth_death", "--t-end", "1", "--paths", "3", "--seed", "11", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out);
    assert!(csv.starts_with("path,time,reaction,S\n"));
    assert!(csv.lines().any(|l| l.starts_with("2,")));
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir.path().join("traj.manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["master_seed"], 11);
    assert_eq!(manifest["resolved"]["engine"], "rtc");
    assert_eq!(manifest["resolved"]["model"]["theta"], serde_json::json!([10.0, 1.0]));
}

#[test]
fn seed_falls_back_to_environment() {
    let args = ["couple", "--model", "example1", "--eps", "1:0.1", "--t-end", "1", "--paths", "5"];
    let with_env = bin().args(args).env("COUPLED_CRN_SEED", "99").output().unwrap();
    let with_flag = run(&[&args[..], &["--seed", "99"]].concat());
    let other = run(&[&args[..], &["--seed", "98"]].concat());
    assert_eq!(with_env.stdout, with_flag.stdout);
    assert_ne!(with_env.stdout, other.stdout);
}

#[test]
fn replay_is_byte_identical_under_other_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let o = run(&[
        "scan", "--model", "example1", "--direction", "1:1", "--grid", "0.2,0.1,0.05", "--method",
        "stacked,split,independent", "--r", "1,2", "--t-end", "1", "--paths", "200", "--seed", "4", "--workers",
        "1", "--out", first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let header = read(&first).lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "method,eps_norm,var_diff,var_std_error,ci_half_width,gap_moment_1,gap_moment_1_std_error,gap_moment_2,gap_moment_2_std_error"
    );
    assert!(read(&dir.path().join("first.slopes.csv")).starts_with("method,quantity,slope"));
    for workers in ["2", "3"] {
        let again = dir.path().join(format!("again{workers}.csv"));
        let o = run(&[
            "replay",
            dir.path().join("first.manifest.json").to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            again.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&again).unwrap());
        assert_eq!(
            std::fs::read(dir.path().join("first.slopes.csv")).unwrap(),
            std::fs::read(dir.path().join(format!("again{workers}.slopes.csv"))).unwrap()
        );
    }
}

#[test]
fn estimate_and_exit_time_tables() {
    let o = run(&[
        "estimate", "--model", "birth_death", "--eps", "0:0.01", "--method", "stacked,independent", "--r", "1",
        "--t-end", "2", "--paths", "400",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "quantity,method,epsilon,value,std_error,n_paths,master_seed");
    assert!(lines[1].starts_with("derivative,stacked,0.01;0,"));
    assert!(lines[2].starts_with("derivative,independent,"));
    assert!(lines[3].starts_with("gap_moment_1,stacked,"));

    let o = run(&[
        "exit-time", "--model", "example1", "--x0", "1", "--m-grid", "5,10", "--t", "1", "--paths", "500",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("m,t,n_paths,n_hit,p_hat,upper_conf,bound,prefactor,decay\n5,1,500,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn oracle_tables() {
    let o = run(&["oracle", "pure-birth", "--kappa", "2", "--M", "5", "--t", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let cdf: f64 = text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    let exact = (1.0 - (-2.0f64).exp()).powi(4);
    assert!((cdf - exact).abs() < 1e-12);

    let o = run(&["oracle", "hypoexp", "--rates", "1,2", "--t", "0.5,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let cdf: f64 = text.lines().nth(2).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((cdf - (1.0 - (-1.0f64).exp()).powi(2)).abs() < 1e-12);

    let o = run(&["oracle", "hypoexp", "--rates", "1,1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
