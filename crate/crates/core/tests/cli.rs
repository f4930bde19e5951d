use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn rit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rit-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CONFIG: &str = "# small FCFS run\nlambda = 1\nv = 0.2\nhorizon = 500\nseed = 3\n";

#[test]
fn run_writes_one_row_per_run() {
    let cfg = scratch("run.cfg", CONFIG);
    let one = rit(&["run", "--config", cfg.to_str().unwrap(), "--policy", "fcfs"]);
    assert_eq!(one.status.code(), Some(0));
    let text = stdout(&one);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("run,policy,seed,lambda,v,rho,capital_d,horizon,warmup,n_capt,n_esc"));

    let many = rit(&["run", "--config", cfg.to_str().unwrap(), "--policy", "sac", "--runs", "30"]);
    assert_eq!(many.status.code(), Some(0));
    let text = stdout(&many);
    assert_eq!(text.lines().count(), 32);
    assert!(text.lines().last().unwrap().starts_with("aggregate,sac,3,"));
}

#[test]
fn usage_and_runtime_errors_have_distinct_exit_codes() {
    let cfg = scratch("codes.cfg", CONFIG);
    let unknown = rit(&["run", "--config", cfg.to_str().unwrap(), "--policy", "greedy"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("fcfs, sac, la, ncla, rmhp"));

    let missing = rit(&["run", "--config", "/nonexistent/rit.cfg", "--policy", "fcfs"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/rit.cfg"));

    assert_eq!(rit(&["run", "--policy", "fcfs"]).status.code(), Some(2));
    assert_eq!(rit(&["frobnicate"]).status.code(), Some(2));

    let bad = scratch("bad.cfg", "lambda = 1\nv = 0.2\nhorizon = 10\ncolour = red\n");
    let out = rit(&["run", "--config", bad.to_str().unwrap(), "--policy", "fcfs"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn sweep_schema() {
    let cfg = scratch("sweep.cfg", "v = 0.8\nhorizon = 300\nseed = 1\n");
    let out = rit(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda-grid",
        "0.5,1",
        "--policies",
        "la,ncla,fcfs",
        "--runs",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,policy,mean_fraction,ci_low,ci_high,runs,upper_bound,policy_lower_bound,seed,la_ncla_factor"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!((rows[0][0], rows[0][1]), ("0.5", "la"));
    assert_eq!(rows[0][9], "0.55648103714");
    assert_eq!(rows[1][7], "", "ncla has no closed-form guarantee");
    assert_eq!(rows[2][9], "", "factor only for look-ahead rows");

    let unsorted = rit(&["sweep", "--config", cfg.to_str().unwrap(), "--lambda-grid", "1,0.5", "--policies", "la"]);
    assert_eq!(unsorted.status.code(), Some(2));
}

#[test]
fn bounds_flags_inapplicable_and_degenerate_points() {
    let ok = rit(&["bounds", "--lambda-grid", "0,1", "--v", "0.8", "--rho", "3", "--capital-d", "20"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout(&ok);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].ends_with(",ok,true"));
    assert!(rows[1].ends_with(",ok,false"));

    let bad = rit(&["bounds", "--lambda-grid", "1", "--v", "0.999", "--capital-d", "4"]);
    assert!(stdout(&bad).lines().nth(1).unwrap().contains("theorem inapplicable"));

    assert_eq!(rit(&["bounds", "--lambda-grid", "1", "--v", "1.5"]).status.code(), Some(2));
}

#[test]
fn output_is_byte_identical_across_invocations() {
    let cfg = scratch("det.cfg", CONFIG);
    let out_a = cfg.with_file_name("a.csv");
    let out_b = cfg.with_file_name("b.csv");
    for out in [&out_a, &out_b] {
        let o = rit(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--policy",
            "la",
            "--runs",
            "4",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}
