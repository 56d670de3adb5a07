use std::path::PathBuf;
use std::process::{Command, Output};

use apfp_core::algebra::Element;
use apfp_core::factorization::PositiveFactorization;
use serde_json::Value;

const TWO_PI: f64 = std::f64::consts::TAU;

fn data(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    root.to_str().unwrap().to_string()
}

fn apfp(args: &[&str]) -> Output {
    apfp_env(args, &[])
}

fn apfp_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_apfp"));
    cmd.args(args).env_remove("APFP_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn exp_line_of_diag_1_2_has_determinant_3() {
    let out = apfp(&["det-path", &data("expline_diag12.json")]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    let (re, im) = complex(&r["determinant"][0]);
    assert!((re - 3.0).abs() <= 1e-12 && im.abs() <= 1e-12, "{re} {im}");
}

#[test]
fn constant_path_has_determinant_0() {
    let out = apfp(&["det-path", &data("constant_m2.json")]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(complex(&r["determinant"][0]), (0.0, 0.0));
    assert_eq!(r["diagnostics"]["closed"], true);
}

#[test]
fn winding_loop_in_m1_is_2_pi_i_with_representative_0() {
    let out = apfp(&["det-path", &data("winding_m1.json")]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    let (re, im) = complex(&r["determinant"][0]);
    assert!(re.abs() <= 1e-12 && (im - TWO_PI).abs() <= 1e-12);
    let (re, im) = complex(&r["canonical_representative"][0]);
    assert!(re.abs() <= 1e-12 && im == 0.0);
    let pairing = &r["loop_pairing"];
    assert_eq!(pairing["consistent"], true);
    assert_eq!(pairing["nearest_class"][0], 1);
    assert!((pairing["delta_1_0"][0].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn quadrature_failure_exits_3() {
    let out = apfp(&["det-path", &data("polar_m2.json"), "--quad-steps", "2", "--quad-max-steps", "8", "--quad-tol", "1e-15"]);
    assert_eq!(code(&out), 3);
    assert!(out.stdout.is_empty());
}

#[test]
fn singular_path_is_rejected_as_input() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("segment.json");
    std::fs::write(
        &file,
        r#"{"domain":[0,1],"kind":"segment","from":{"blocks":[[[[1,0]]]]},"to":{"blocks":[[[[-1,0]]]]}}"#,
    )
    .unwrap();
    assert_eq!(code(&apfp(&["det-path", file.to_str().unwrap()])), 2);
}

#[test]
fn flip_is_not_in_closure_and_report_is_still_written() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("report.json");
    let out = apfp(&["factor", &data("flip_m2.json"), "--out", out_file.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let r = &report["result"];
    assert_eq!(r["status"], "not_in_closure");
    assert_eq!(r["membership"]["member"], false);
    assert!((r["membership"]["phases"][0].as_f64().unwrap().abs() - std::f64::consts::PI).abs() <= 1e-12);
    assert!(r["distance_probe"]["distance"].as_f64().unwrap() > 0.0);
}

#[test]
fn non_normal_element_factors_to_target() {
    let out = apfp(&["factor", &data("nonnormal_m2.json"), "--factors", "5", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["status"], "converged");
    let f = &r["factorization"];
    assert!(f["relative_residual"].as_f64().unwrap() <= 1e-6);
    let factors: Vec<Element> = serde_json::from_value(f["factors"].clone()).unwrap();
    assert_eq!(factors.len(), 5);
    assert!(factors.iter().all(|p| p.is_positive(1e-10)));
    let x: Element = serde_json::from_str(&std::fs::read_to_string(data("nonnormal_m2.json")).unwrap()).unwrap();
    let recomputed = PositiveFactorization::compute_residual(&factors, &x).unwrap();
    assert_eq!(recomputed, f["residual"].as_f64().unwrap());
}

#[test]
fn positive_input_needs_a_single_factor() {
    let out = apfp(&["factor", &data("positive_m2.json")]);
    assert_eq!(code(&out), 0);
    let f = &json(&out)["result"]["factorization"];
    assert_eq!(f["nontrivial_factors"], 1);
    assert_eq!(f["residual"], 0.0);
}

#[test]
fn starved_optimizer_exits_5_with_best_attempt() {
    let out = apfp(&["factor", &data("nonnormal_m2.json"), "--restarts", "1", "--max-iterations", "1"]);
    assert_eq!(code(&out), 5);
    let r = &json(&out)["result"];
    assert_eq!(r["status"], "no_convergence");
    assert!(r["best"]["relative_residual"].as_f64().unwrap() > 1e-6);
}

#[test]
fn membership_reports_phases() {
    let out = apfp(&["membership", &data("nonnormal_m2.json")]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["membership"]["member"], true);
    let out = apfp(&["membership", &data("flip_m2.json")]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["membership"]["member"], false);
}

#[test]
fn check_matrix_algebras_fail_with_the_expected_set() {
    for file in ["m2.json", "m2_m3.json"] {
        let out = apfp(&["check", &data(file)]);
        assert_eq!(code(&out), 0);
        let r = &json(&out)["result"];
        assert_eq!(r["apfp_verdict"], false);
        assert_eq!(r["failing_conditions"], serde_json::json!(["no_findim_reps", "rho_dense"]));
    }
}

#[test]
fn check_abstract_descriptors() {
    let out = apfp(&["check", &data("irrational_rotation.json")]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["apfp_verdict"], true);

    let out = apfp(&["check", &data("rational_pair.json")]);
    assert_eq!(code(&out), 0);
    let r = &json(&out)["result"];
    assert_eq!(r["conditions"]["rho_dense"]["holds"], false);
    assert_eq!(r["conditions"]["rho_dense"]["witness"]["generator"], "1/6");

    assert_eq!(code(&apfp(&["check", &data("rank_two_unasserted.json")])), 6);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let bad = bad.to_str().unwrap();
    for args in [
        vec!["check", bad],
        vec!["det-path", bad],
        vec!["factor", bad],
        vec!["membership", bad],
        vec!["check", "/nonexistent/descriptor.json"],
        vec!["demo", "--name", "no-such-demo"],
        vec!["bench", "--tol", "no_such_tolerance=1"],
        vec!["bench", "--quad-steps", "banana"],
    ] {
        assert_eq!(code(&apfp(&args)), 2, "{args:?}");
    }
    let out = apfp_env(&["bench", "--repeats", "1"], &[("APFP_THREADS", "0")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn every_demo_passes() {
    for name in ["polar-path-determinant-zero", "splitting-trace-zero", "commutator-witness", "loop-lattice"] {
        let out = apfp(&["demo", "--name", name, "--seed", "11"]);
        assert_eq!(code(&out), 0, "{name}");
        let r = &json(&out)["result"];
        assert_eq!(r["passed"], true, "{name}");
        assert!(!r["checks"].as_array().unwrap().is_empty());
    }
}

#[test]
fn demo_failure_exits_7_with_report() {
    let out = apfp(&["demo", "--name", "loop-lattice", "--tol", "pairing=1e-300"]);
    assert_eq!(code(&out), 7);
    let r = &json(&out)["result"];
    assert_eq!(r["passed"], false);
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn csv_output_has_block_columns() {
    let out = apfp(&["det-path", &data("polar_m2.json"), "--output", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(headers, ["quantity", "value", "block_0_re", "block_0_im"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let det = rows.iter().find(|r| &r[0] == "determinant").unwrap();
    assert!(det[2].parse::<f64>().unwrap().abs() <= 1e-7);
    assert!(det[3].parse::<f64>().unwrap().abs() <= 1e-7);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cases: [&[&str]; 3] = [
        &["factor", &data("nonnormal_m2.json"), "--seed", "5"],
        &["det-path", &data("polar_m2.json")],
        &["demo", "--name", "splitting-trace-zero", "--seed", "2"],
    ];
    for args in cases {
        let one = json(&apfp_env(args, &[("APFP_THREADS", "1")]));
        let four = json(&apfp_env(args, &[("APFP_THREADS", "4")]));
        assert_eq!(
            serde_json::to_string(&one["result"]).unwrap(),
            serde_json::to_string(&four["result"]).unwrap(),
            "{args:?}"
        );
        assert_eq!(one["config"], four["config"]);
    }
}

#[test]
fn stdin_input_is_accepted() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_apfp"))
        .args(["check", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(br#"{"block_sizes": [1]}"#).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["apfp_verdict"], false);
}
