use std::io::Write;
use std::process::{Command, Output, Stdio};

use phi_debruijn::report::{parse_config, Report, CSV_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phi-debruijn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("run.json");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_names_every_suite() {
    for args in [&["--list"][..], &["list"][..]] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8(o.stdout).unwrap();
        for name in phi_debruijn::identities::SUITE_NAMES {
            assert!(text.contains(name), "{name} missing from {text}");
        }
    }
}

#[test]
fn csv_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("levy.csv");
    let o = run(&[
        "verify",
        "--suite",
        "levy",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows
        .iter()
        .all(|r| r.starts_with("levy/") && r.ends_with(",true")));
}

#[test]
fn json_report_echoes_config_and_tolerance_flag() {
    let o = run(&[
        "verify", "--suite", "levy", "--suite", "guo", "--tol", "0.002", "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Report = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.tool, "phi-debruijn");
    assert_eq!(report.suites.len(), 2);
    assert_eq!(report.summary.total, report.checks.len());
    let cfg = report.config.unwrap();
    assert_eq!(cfg.tolerance.unwrap().rel, 0.002);
    assert_eq!(cfg.seed, Some(5));
    assert!(report.checks.iter().all(|c| c.tolerance.rel == 0.002));
    // the echo is itself a valid configuration
    let echo = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse_config(&echo).unwrap(), cfg);
}

#[test]
fn empty_suite_reports_nothing_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, r#"{"suites":[{"name":"empty","checks":[]}]}"#);
    let o = run(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks"], serde_json::json!([]));
    assert_eq!(v["summary"]["total"], 0);
    assert_eq!(v["summary"]["passed"], 0);
}

#[test]
fn exit_codes_distinguish_failure_and_error() {
    let dir = tempfile::tempdir().unwrap();
    // an unreachably tight tolerance fails
    let cfg = write_config(
        &dir,
        r#"{"suites":[{"name":"tight","checks":[{"kind":"scalar_entropy",
            "density":{"family":"cauchy"},"functional":{"functional":"shannon"},
            "theta":1.0,"tolerance":{"rel":1e-15,"abs":0.0}}]}]}"#,
    );
    assert_eq!(run(&["verify", "--config", &cfg]).status.code(), Some(1));
    // a wrong PDE is gated: errored
    let cfg = write_config(
        &dir,
        r#"{"suites":[{"name":"gated","checks":[{"kind":"scalar_entropy",
            "density":{"family":"gaussian"},"functional":{"functional":"shannon"},
            "pde":"laplace","theta":1.0}]}]}"#,
    );
    let o = run(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let report: Report = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.summary.errored, 1);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"suites":["levy"],"theta_grid":[]}"#, "theta_grid"),
        (
            r#"{"suites":["levy"],"tolerance":{"rel":0,"abs":1e-8}}"#,
            "tolerance.rel",
        ),
        (r#"{"suites":["nope"]}"#, "suites"),
        (
            r#"{"suites":[{"name":"x","checks":[{"kind":"scalar_entropy",
                "density":{"family":"gaussian"},"functional":{"functional":"renyi"}}]}]}"#,
            "functional",
        ),
        ("{\"suites\": [\"levy\",\n", "line 2"),
    ];
    for (text, field) in cases {
        let cfg = write_config(&dir, text);
        let o = run(&["verify", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(field), "{field}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    let o = run(&["verify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("suites"));
}

#[test]
fn measure_from_stdin() {
    let mut child = bin()
        .args(["measure", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(
            br#"{"measure":"divergence","p1":{"family":"gaussian","offset":1.0},
                "p0":{"family":"gaussian"},"functional":{"functional":"shannon"},"theta":1.0}"#,
        )
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // KL(N(0,2) ‖ N(0,1)) = ½(2 − 1 − ln 2)
    let kl = 0.5 * (1.0 - 2f64.ln());
    assert!((v["value"].as_f64().unwrap() - kl).abs() < 1e-10);
}

#[test]
fn thread_count_does_not_change_results() {
    let strip = |o: Output| {
        let mut r: Report = serde_json::from_slice(&o.stdout).unwrap();
        r.timestamp = None;
        serde_json::to_string(&r).unwrap()
    };
    let one = bin()
        .args(["verify", "--suite", "cauchy"])
        .env("PHI_DEBRUIJN_THREADS", "1")
        .output()
        .unwrap();
    let many = bin()
        .args(["verify", "--suite", "cauchy"])
        .env("PHI_DEBRUIJN_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(strip(one), strip(many));
}

#[test]
fn shipped_example_config_passes() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example.json");
    let o = run(&["verify", "--config", path, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
