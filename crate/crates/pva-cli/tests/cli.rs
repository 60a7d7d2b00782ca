use std::process::{Command, Output};

fn pva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pva")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let o = pva(&all);
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn vder_prints_canonical_form() {
    let o = pva(&["vder", "1/2*u^3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "3/2*u^2");
    assert_eq!(json(&["vder", "u*u''"]), serde_json::json!(["2*u''"]));
}

#[test]
fn check_pva_exit_codes() {
    let ok = pva(&["check-pva", "--op", "u' + 2*u*d + c*d^3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("PASS"));
    let bad = pva(&["check-pva", "--op", "d^2"]);
    assert_eq!(bad.status.code(), Some(1));
    let report = json(&["check-pva", "--op", "u'' + 2*u'*d"]);
    assert_eq!(report["passed"], false);
    assert_eq!(report["failures"][0]["kind"], "jacobi");
}

#[test]
fn sampled_jacobi_check() {
    let report = json(&["check-pva", "--op", "u' + 2*u*d", "--sample", "5"]);
    assert_eq!(report["passed"], true);
    assert_eq!(report["samples"], 5);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(pva(&["bogus"]).status.code(), Some(2));
    assert_eq!(pva(&["vder", "u +* v"]).status.code(), Some(2));
    assert_eq!(pva(&["vder", "(u+v)/(u+1)"]).status.code(), Some(2));
    assert_eq!(pva(&["hierarchy", "toda"]).status.code(), Some(2));
}

#[test]
fn compute_errors_exit_1() {
    let o = pva(&["integrate", "u"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not exact"));
}

#[test]
fn hierarchy_kdv_json() {
    let rec = json(&["hierarchy", "kdv", "--depth", "3"]);
    assert_eq!(rec["name"], "kdv");
    assert_eq!(rec["mode"], "hamiltonian");
    let steps = rec["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 4);
    assert_eq!(steps[2]["F"][0], "c*u'' + 3/2*u^2");
    assert_eq!(steps[1]["flow"][0], "c*u''' + 3*u'*u");
    assert_eq!(rec["verification"]["recursion"], true);
    assert_eq!(rec["verification"]["involution_h"], true);
}

#[test]
fn bound_parameter() {
    let rec = json(&["--param", "c=0", "hierarchy", "kdv", "--depth", "2"]);
    assert_eq!(rec["steps"][2]["F"][0], "3/2*u^2");
}

#[test]
fn golden_flag() {
    let o = pva(&["hierarchy", "nls", "--golden"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn symplectic_potential() {
    let o = pva(&["check-symplectic", "--potential", "-1/2*u'^(-1)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn lenard_detects_chain() {
    let rec = json(&["lenard", "--h", "d^3", "--k", "u' + 2*u*d", "--start", "u^(-1/2)", "--depth", "2"]);
    assert_eq!(rec["verification"]["recursion"], true);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["--json", "hierarchy", "cnw"][..],
        &["check-pva", "--op", "u' + 2*u*d", "--sample", "3", "--seed", "7"][..],
        &["bracket", "u^2", "u'", "--op", "d"][..],
    ] {
        let a = pva(args);
        let b = pva(args);
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(a.status.code(), b.status.code());
    }
}
