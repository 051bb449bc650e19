use std::process::{Command, Output};

fn shamanskii(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shamanskii"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn it_inv(out: &Output) -> usize {
    let s = stdout(out);
    let field = s
        .split_whitespace()
        .find_map(|w| w.strip_prefix("it_inv="))
        .expect("it_inv field");
    field.parse().unwrap()
}

#[test]
fn run_reports_counts() {
    let out = shamanskii(&["run", "--problem", "b", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stdout(&out).contains("it_inv=4 it_tot=8"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn run_unknown_problem_is_usage_error() {
    let out = shamanskii(&["run", "--problem", "z", "--m", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown problem"));
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(
        shamanskii(&["run", "--problem", "b", "--m", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        shamanskii(&["suite", "--format", "xml"]).status.code(),
        Some(1)
    );
    assert_eq!(shamanskii(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(shamanskii(&["--help"]).status.code(), Some(0));
}

#[test]
fn looser_tolerance_converges_no_later() {
    let tight = shamanskii(&["run", "--problem", "b", "--m", "1"]);
    let loose = shamanskii(&["run", "--problem", "b", "--m", "1", "--tol", "1e-3"]);
    assert_eq!(loose.status.code(), Some(0));
    assert!(it_inv(&loose) < it_inv(&tight));
}

#[test]
fn verbose_run_lists_outer_residuals() {
    let out = shamanskii(&["run", "--problem", "e", "--m", "1", "--verbose"]);
    let s = stdout(&out);
    let residual_lines = s.lines().filter(|l| l.starts_with("outer")).count();
    assert_eq!(residual_lines, it_inv(&out) + 1);
}

#[test]
fn run_failure_exits_two() {
    let out = shamanskii(&["run", "--problem", "e", "--max-outer", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("status=MaxIterations"));
}

#[test]
fn default_suite_csv() {
    let out = shamanskii(&["suite", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(!s.contains('\r'));
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(
        lines[0],
        "problem,m,it_inv,it_tot,rho,status,final_residual"
    );
    assert_eq!(lines.len(), 21);
    assert!(lines.iter().any(|l| l.starts_with("a,4,2,8,NA,Converged,")));
}

#[test]
fn default_suite_table_mirrors_grid() {
    let out = shamanskii(&["suite"]);
    let s = stdout(&out);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].contains("m=1") && lines[0].contains("m=4"));
    let row_a = lines.iter().find(|l| l.starts_with("(a)")).unwrap();
    assert!(row_a.contains("5 (5) 2.0044"));
    assert!(row_a.contains("2 (8) NA"));
}

#[test]
fn singleton_suite_table() {
    let out = shamanskii(&["suite", "--problems", "b", "--ms", "1"]);
    let s = stdout(&out);
    assert_eq!(s.lines().count(), 2);
    assert_eq!(s.lines().nth(1).unwrap().matches('(').count(), 2);
}

#[test]
fn json_uses_null_for_na() {
    let out = shamanskii(&[
        "suite",
        "--problems",
        "a",
        "--ms",
        "1,4",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["rho"], serde_json::json!(2.0044));
    assert!(rows[1]["rho"].is_null());
    for key in [
        "problem",
        "m",
        "it_inv",
        "it_tot",
        "rho",
        "status",
        "final_residual",
    ] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn output_is_deterministic() {
    for format in ["csv", "json"] {
        let a = shamanskii(&["suite", "--format", format]);
        let b = shamanskii(&["suite", "--format", format]);
        assert_eq!(a.stdout, b.stdout, "{format}");
    }
}

#[test]
fn check_jacobians_passes_on_registry() {
    let out = shamanskii(&["check-jacobians"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let s = stdout(&out);
    for p in ["a", "b", "c", "d", "e"] {
        let line = s.lines().find(|l| l.starts_with(&format!("{p} "))).unwrap();
        assert!(line.ends_with("ok"), "{line}");
        assert!(line.contains(" 11 "), "{line}");
    }
}

#[test]
fn check_jacobians_at_trig_start_is_tight() {
    let out = shamanskii(&["check-jacobians", "--problems", "c", "--points", "0"]);
    let s = stdout(&out);
    let line = s.lines().find(|l| l.starts_with("c ")).unwrap();
    let max_error: f64 = line.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!(max_error < 1e-6, "{line}");
}

#[test]
fn list_problems() {
    let out = shamanskii(&["list-problems"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 5);
}
