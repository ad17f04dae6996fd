use std::path::Path;
use std::process::{Command, Output};

fn diskwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diskwalk")).args(args).output().expect("binary runs")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn csv_headers_are_exact() {
    let cases: [(&[&str], &str); 7] = [
        (&["k-constant", "--nodes", "8", "--samples-per-node", "200"], "theta,weight,wtheta,estimate,stderr,n"),
        (&["k-limit", "--heights", "1,2", "--samples", "200"], "y,estimate,stderr,n"),
        (&["density", "--domain", "1,0.2", "--grid", "64"], "phi,m,rho,sigma"),
        (&["sweep", "--domain", "disk", "--h", "0.2", "--budget", "200", "--pilot", "0"], "h,mc,mc_stderr,exact,ratio,ratio_stderr"),
        (&["greens", "--h", "0.1", "--budget", "200", "--collar-sectors", "0"], "x,y,gh_scaled,gd8,diff,visits"),
        (&["potential", "--radii", "10,15,20,25,30,40"], "r,a,residual"),
        (&["blayer"], "h,l,numeric,formula,diff"),
    ];
    for (args, header) in cases {
        let text = stdout(&diskwalk(args));
        assert_eq!(data_lines(&text)[0], header, "{args:?}");
        assert!(text.starts_with("# diskwalk "));
        assert!(text.contains("# config: "));
    }
}

#[test]
fn k_constant_has_node_rows_and_summary_row() {
    let text = stdout(&diskwalk(&["k-constant", "--nodes", "8", "--samples-per-node", "1e3", "--seed", "7"]));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 1 + 8 + 1);
    assert!(rows[9].starts_with("K,,,"));
    let k: f64 = rows[9].split(',').nth(3).unwrap().parse().unwrap();
    assert!((k - 0.2647664).abs() < 0.02);
}

#[test]
fn exit_codes_follow_error_class() {
    assert_eq!(diskwalk(&["sweep", "--h", "0.5", "--budget", "10"]).status.code(), Some(2));
    assert_eq!(diskwalk(&["density", "--grid", "10"]).status.code(), Some(2));
    assert_eq!(
        diskwalk(&["sweep", "--domain", "cardioid:0.2", "--h", "0.08", "--budget", "1e3", "--pilot", "1e3", "--estimator", "raw"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(diskwalk(&["density", "--domain", "1,2"]).status.code(), Some(4));
    assert_eq!(diskwalk(&["blayer", "--f", "re9"]).status.code(), Some(2));
}

#[test]
fn deterministic_output_is_reproducible_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let s = dir.path().join("s.json");
    for p in [&a, &b] {
        let o = diskwalk(&[
            "sweep",
            "--h",
            "0.1",
            "--budget",
            "500",
            "--pilot",
            "0",
            "--deterministic",
            "--out",
            p.to_str().unwrap(),
            "--summary",
            s.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(!text.contains("timestamp"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&s).unwrap()).unwrap();
    assert!(summary["summary"]["extrapolated_slope"]["mean"].is_number());
    assert!(summary["summary"]["predicted_slope"].is_number());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 3, "{leftovers:?}");
    assert!(!Path::new(&dir.path().join(".tmp")).exists());
}

#[test]
fn timestamp_present_without_deterministic_flag() {
    let text = stdout(&diskwalk(&["potential", "--radii", "10,15,20,25,30,40"]));
    assert!(text.contains("# timestamp: "));
}

#[test]
fn json_format_carries_rows_and_summary() {
    let text =
        stdout(&diskwalk(&["density", "--domain", "cardioid:0.2", "--grid", "64", "--g", "re2", "--format", "json", "--deterministic"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["phi", "m", "rho", "sigma"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 64);
    assert!((v["summary"]["predicted_slope"].as_f64().unwrap() + 0.0025067).abs() < 1e-6);
}
