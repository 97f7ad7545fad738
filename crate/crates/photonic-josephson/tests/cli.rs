use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photonic-josephson"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pj-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn run_writes_csv_to_file() {
    let out = scratch("fig2a.csv");
    let st = bin().args(["run", "--scenario", "fig2a", "--t-end", "2", "--out"]).arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(st.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,n_a,n_b,Z,P_f,P_q,Rx,Ry,Rz,R_abs");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101);
    assert!(rows[1].starts_with("2.00000000000000004e-2,"));
}

#[test]
fn run_to_stdout_keeps_diagnostics_on_stderr() {
    let out = bin().args(["run", "--scenario", "fig1", "--t-end", "1"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("t,"));
    assert!(!stdout.contains("engine"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("engine bright"));
}

#[test]
fn unknown_config_key_exits_4() {
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "scenario = \"x\"\nDelta = 50.0\ndelta = 1.0\nfrobnicate = 1\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("frobnicate") && err.contains("line 4"), "{err}");
}

#[test]
fn trace_drift_exits_3() {
    let cfg = scratch("strict.toml");
    std::fs::write(
        &cfg,
        "scenario = \"strict\"\nDelta = 5.0\ndelta = 1.0\nalpha_re = 1.0\ncutoff_a = 10\ncutoff_b = 10\n\
         t_end = 20.0\ndt = 0.01\nrecord_stride = 10\ntrace_tolerance = 1e-30\n",
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("trace drift"));
}

#[test]
fn invalid_arguments_exit_2() {
    for args in [
        vec!["run"],
        vec!["run", "--scenario", "fig42"],
        vec!["run", "--scenario", "fig1", "--dt", "-1"],
        vec!["compare", "--scenario", "fig1"],
        vec!["validate", "--criterion", "12"],
        vec!["bogus"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn compare_pairs_numeric_and_analytic_columns() {
    let out = bin().args(["compare", "--scenario", "fig2a", "--t-end", "20"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("t,P_q,P_q_analytic\n"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("P_q: sup"));
}

#[test]
fn validate_single_criterion() {
    let out = bin().args(["validate", "--fast", "--criterion", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[PASS]  9 purification"), "{stdout}");
    assert!(stdout.contains("0 failed"));
}

#[test]
fn help_exits_0() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}
