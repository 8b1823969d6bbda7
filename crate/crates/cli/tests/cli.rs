use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fisher(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fisher"));
    cmd.args(args).env_remove("FISHER_OUT_DIR");
    if let Some(dir) = env_dir {
        cmd.env("FISHER_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn averages_csv_to_stdout() {
    let o = fisher(&["averages"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("quantity,value,closed_form,abs_error,half_grid_delta"));
    assert_eq!(lines.count(), 10);
    assert!(out.lines().any(|l| l.starts_with("<phi^3>,") && l.contains(",1.5000000000000000e0,")));
}

#[test]
fn table1_headers_and_rows() {
    let o = fisher(&["table1"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "eps,radius,I,Q,D,defect,ratio,published_I,published_Q,published_D,published_defect,published_ratio,status"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",pass")));
}

#[test]
fn zero_eps_control_row() {
    let o = fisher(&["table1", "--eps", "0", "--grid", "64"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let ratio: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
    assert!((ratio - 2.0).abs() < 1e-12);
}

#[test]
fn json_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("avg.json");
    let o = fisher(&["averages", "--format", "json", "--out", path.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "averages");
    assert_eq!(v["columns"][0], "quantity");
    assert_eq!(v["rows"].as_array().unwrap().len(), 10);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = fisher(&["averages", "--grid", "32"], Some(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("averages.csv")).unwrap();
    assert!(text.starts_with("quantity,"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "eps = [0.01, 0.02]\ngrid = 32\nformat = \"csv\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = fisher(&["theta-scan", "--config", cfg, "--dim", "2"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    // Three families, two eps each.
    assert_eq!(stdout(&o).lines().count(), 1 + 3 * 2);

    let o = fisher(&["theta-scan", "--config", cfg, "--dim", "2", "--eps", "0.03"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 3);
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "gird = 32\n").unwrap();
    let o = fisher(&["averages", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error"));
}

#[test]
fn invalid_grid_is_an_error() {
    let o = fisher(&["flow", "--grid", "8"], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn failing_check_gives_exit_one() {
    // Without mirroring, the cubic coefficient of D is biased by more than 1%.
    let o = fisher(&["expand", "--scheme", "plain"], None);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("FAILED torus D c3"), "{err}");
    assert!(stdout(&o).contains(",false"));
}

#[test]
fn output_is_independent_of_worker_count() {
    let one = fisher(&["table1", "--grid", "64", "--workers", "1"], None);
    let four = fisher(&["table1", "--grid", "64", "--workers", "4"], None);
    assert!(one.status.code().is_some() && four.status.code().is_some());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn flow_schema() {
    let o = fisher(&["flow", "--times", "0,0.05", "--grid", "64"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines().next().unwrap(),
        "t,I,Q,D,defect,ratio,first_residual,second_residual,first_order,second_order"
    );
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn mixture_schedule() {
    let o = fisher(&["mixture", "--schedule", "0.5,0.25", "--separation", "40"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("L,eta,r,sigma,"));
    assert_eq!(out.lines().count(), 3);
}
