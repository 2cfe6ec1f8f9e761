use std::path::PathBuf;
use std::process::Command;

use brunoform::parse::parse_field;
use brunoform::{Gaussian, TruncatedIdeal};
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_brunoform"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8 output"))
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, text) = run(args);
    (code, serde_json::from_str(&text).expect("JSON report"))
}

#[test]
fn bruno_ideal_of_the_cone_field() {
    let input = data("cone.txt");
    let (code, report) = run_json(&["bruno-ideal", "--input", &input, "--order", "16"]);
    assert_eq!(code, 0);
    assert_eq!(report["schema_version"], 1);
    let result = &report["result"];
    for key in ["bruno_ideal_original", "bruno_ideal_normalized"] {
        let gens = result[key]["generators"].as_array().unwrap();
        assert_eq!(gens.len(), 1, "{key}: {gens:?}");
        assert_eq!(gens[0], "(1+0*i)*x*y + (-1+0*i)*z^2");
    }
    // The printed generator reparses to the same ideal as xy - z^2.
    let text = format!("vars: x, y, z\n({})*x*dx", result["bruno_ideal_original"]["generators"][0].as_str().unwrap());
    let d = parse_field(&text).unwrap().derivation::<Gaussian>(16).unwrap();
    let g = d.log_coefficients()[0].clone();
    let cone = parse_field("vars: x, y, z\nscalars: gaussian\n(x*y - z^2)*x*dx").unwrap().derivation::<Gaussian>(16).unwrap();
    let expected = TruncatedIdeal::new(3, 16, [cone.log_coefficients()[0].clone()]);
    assert!(TruncatedIdeal::new(3, 16, [g]).ideal_equal(&expected, 16));
    assert_eq!(result["f_minus_f0_in_ideal"], true);
    assert_eq!(result["g_in_ideal"], serde_json::json!([true, true]));
}

#[test]
fn omega_table_for_a_saddle() {
    let (code, report) = run_json(&["omega", "--lambda", "1,-1", "--kmax", "8"]);
    assert_eq!(code, 0);
    let omega = &report["result"]["omega"];
    let records = omega["records"].as_array().unwrap();
    assert_eq!(records.len(), 9);
    for r in records {
        assert_eq!(r["omega"].as_f64(), Some(1.0));
    }
    assert_eq!(omega["bruno_sum"]["verdict"], "SatisfiedCertified");
}

#[test]
fn omega_modes_and_scalars() {
    let (_, paper) = run_json(&["omega", "--lambda", "2,-3", "--kmax", "4", "--mode", "paper"]);
    let (_, nonneg) = run_json(&["omega", "--lambda", "2,-3", "--kmax", "4", "--mode", "nonneg"]);
    let values = |r: &Value| -> Vec<f64> {
        r["result"]["omega"]["records"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x["omega"].as_f64().unwrap())
            .collect()
    };
    for (p, n) in values(&paper).iter().zip(values(&nonneg)) {
        assert!(*p <= n);
    }
    let (code, gauss) = run_json(&["omega", "--lambda", "1+1*i,-1-1*i", "--kmax", "3"]);
    assert_eq!(code, 0);
    assert_eq!(gauss["result"]["scalars"], "gaussian");
    let (code, float) = run_json(&["omega", "--lambda", "1.0,-1.4142135623730951", "--kmax", "5"]);
    assert_eq!(code, 0);
    assert_eq!(float["result"]["scalars"], "float");
    assert_ne!(float["result"]["omega"]["bruno_sum"]["verdict"], "SatisfiedCertified");
}

#[test]
fn normalize_linear_field_is_trivial() {
    let input = data("linear.txt");
    let (code, report) = run_json(&["normalize", "--input", &input, "--order", "8"]);
    assert_eq!(code, 0);
    let result = &report["result"];
    assert_eq!(result["coordinate_change"]["identity"], true);
    assert_eq!(result["trace"]["steps"].as_array().unwrap().len(), 0);
    assert_eq!(result["normal_form"], result["input"]);
}

#[test]
fn normalize_both_methods_agree_on_resonant_only_output() {
    let input = data("resonant_saddle.txt");
    for method in ["newton", "graded"] {
        let (code, report) = run_json(&["normalize", "--input", &input, "--order", "8", "--method", method]);
        assert_eq!(code, 0);
        assert_eq!(report["result"]["resonant_only"], true);
        let expected = if method == "newton" { Value::Bool(true) } else { Value::Null };
        assert_eq!(report["result"]["trace"]["flatness"], expected);
    }
}

#[test]
fn reports_are_deterministic_and_timing_is_opt_in() {
    let input = data("cone.txt");
    let args = ["certify", "--input", &input, "--order", "8"];
    let (_, a) = run(&args);
    let (_, b) = run(&args);
    assert_eq!(a, b);
    let parsed: Value = serde_json::from_str(&a).unwrap();
    assert!(parsed.get("timing").is_none());
    let (_, timed) = run_json(&["certify", "--input", &input, "--order", "8", "--timing"]);
    assert!(timed["timing"]["total_ms"].as_f64().is_some());
}

#[test]
fn certify_reports_verdicts() {
    let input = data("cone.txt");
    let (code, report) = run_json(&["certify", "--input", &input, "--order", "8", "--C", "3"]);
    assert_eq!(code, 0);
    let v = &report["result"]["verdict"];
    assert_eq!(v["omega_condition"], "SatisfiedCertified");
    assert_eq!(v["certificate_matches_bruno_ideal"], true);
    assert!(report["result"]["radius_schedule"]["radii"].as_array().unwrap().len() > 1);

    let input = data("resonant_saddle.txt");
    let (code, report) = run_json(&["certify", "--input", &input, "--order", "8"]);
    assert_eq!(code, 0);
    assert!(!report["result"]["diagnostics"]["steps"].as_array().unwrap().is_empty());
}

#[test]
fn oracle_compare_agrees() {
    let input = data("resonant_saddle.txt");
    let (code, report) = run_json(&["oracle-compare", "--input", &input, "--jet", "8"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["equal"], true);
    assert_eq!(report["result"]["commute"], true);
}

#[test]
fn check_suite_passes() {
    for (name, extra) in [
        ("cone.txt", vec![]),
        ("resonant_saddle.txt", vec![]),
        ("float.txt", vec!["--epsilon", "1e-10"]),
    ] {
        let input = data(name);
        let mut args = vec!["check", "--input", &input, "--order", "8"];
        args.extend(extra);
        let (code, report) = run_json(&args);
        assert_eq!(code, 0, "{name}: {report}");
        assert_eq!(report["result"]["all_passed"], true);
    }
}

#[test]
fn errors_are_machine_readable() {
    let input = data("not_logarithmic.txt");
    let (code, report) = run_json(&["check", "--input", &input]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "NotLogarithmic");
    assert!(report["error"]["message"].as_str().unwrap().contains("y"));

    let (code, report) = run_json(&["normalize", "--input", &data("linear.txt"), "--order", "6"]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "InvalidOrder");

    let (code, report) = run_json(&["bruno-ideal", "--input", &data("missing.txt")]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "Io");

    let (code, report) = run_json(&["omega", "--lambda", "0,0"]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "ZeroLambda");
}

#[test]
fn out_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("brunoform-out-{}.json", std::process::id()));
    let out = path.display().to_string();
    let (code, stdout) = run(&["normalize", "--input", &data("linear.txt"), "--order", "4", "--out", &out]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(report["command"]["name"], "normalize");
}
