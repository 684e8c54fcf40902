use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn topoft(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topoft"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn analytic_report_for_equal_model2_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let o = topoft(
        &["analytic", "--model2", "--pP", "0.001", "--pS", "0.001", "--pM", "0.001", "--p2", "0.001", "--out", "a"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("a/report.json"));
    // 76/15 + 2/3 + 4/3 + 4/3 = 8.4 per unit rate.
    let pz = r["equivalent_z"]["pZ"].as_f64().unwrap();
    assert!((pz - 8.4e-3).abs() < 1e-15, "{pz}");
    assert_eq!(r["reed_muller"]["threshold_leading_order"]["exact"], "1/105");
    let rows = r["thresholds"].as_array().unwrap();
    let exact: Vec<&str> = rows.iter().map(|t| t["reed_muller"]["exact"].as_str().unwrap()).collect();
    assert_eq!(exact, ["1/70", "1/350", "1/532", "1/882"]);
    let m = json(&tmp.path().join("a/manifest.json"));
    assert_eq!(m["experiment"], "analytic");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["files"][0], "report.json");
}

#[test]
fn central_attempt_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let o = topoft(&["analytic", "--model2", "--p2", "0.01", "--central-attempt", "--out", "a"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("a/report.json"));
    assert_eq!(r["central_attempt"]["agrees"], false);
    assert_eq!(r["central_attempt"]["discrepancy"]["z"], "-32/15 p2");
}

#[test]
fn sweep_rows_and_reproducible_bodies() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sweep", "--model", "independent", "--q", "0.02:0.03:0.005", "--L", "4,5", "--trials", "200", "--seed", "3"];
    let run = |out: &str| {
        let mut a = args.to_vec();
        a.extend(["--out", out, "--fresh"]);
        let o = topoft(&a, tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(tmp.path().join(out).join("sweep.csv")).unwrap()
    };
    let first = run("s1");
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "L,p_or_q,model,n_trials,n_fail,rate,lo95,hi95");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("4,0.02,independent,200,"));
    assert_eq!(first, run("s2"));
}

#[test]
fn checkpoints_resume_a_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sweep", "--p2", "0.008,0.01", "--L", "4", "--trials", "100", "--out", "s", "--checkpoints", "ck"];
    let a = topoft(&args, tmp.path());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(std::fs::read_dir(tmp.path().join("ck")).unwrap().count(), 2);
    let b = topoft(&args, tmp.path());
    assert_eq!(stderr(&b).matches("(checkpoint)").count(), 2);
}

#[test]
fn config_file_runs_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"experiment": "sweep", "family": {"model2_direction": {"local": 1.0, "gate": 0.0}},
        "sizes": [4], "params": [0.005], "n_trials": 50, "seed": 2}"#;
    std::fs::write(tmp.path().join("c.json"), cfg).unwrap();
    let o = topoft(&["sweep", "--config", "c.json", "--trials", "30", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let body = std::fs::read_to_string(tmp.path().join("o/sweep.csv")).unwrap();
    assert!(body.lines().nth(1).unwrap().starts_with("4,0.005,model2-l1-g0,30,"), "{body}");
}

#[test]
fn fit_recovers_synthetic_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("L,p_or_q,model,n_trials,n_fail,rate,lo95,hi95\n");
    for l in [8.0f64, 12.0, 16.0] {
        for i in 0..7 {
            let p = 0.0293 * (0.85 + 0.05 * i as f64);
            let x = (p - 0.0293) * l;
            let f = 0.2 + 5.0 * x + 10.0 * x * x;
            csv += &format!("{l},{p},independent,30000,0,{f},{},{}\n", f - 0.004, f + 0.004);
        }
    }
    std::fs::write(tmp.path().join("sweep.csv"), csv).unwrap();
    let o = topoft(&["fit", "sweep.csv", "--out", "f"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(tmp.path().join("f/fit.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    let get = |k: &str| row[headers.iter().position(|h| h == k).unwrap()].parse::<f64>().unwrap();
    assert!((get("p_c") - 0.0293).abs() < 1e-6);
    assert!((get("nu0") - 1.0).abs() < 1e-4);
}

#[test]
fn near_defect_and_tradeoff_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = topoft(&["near-defect", "--q", "0.02,0.03", "--L", "4", "--trials", "20", "--out", "n"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(json(&tmp.path().join("n/report.json"))["fallbacks"].is_u64());
    let o = topoft(
        &["tradeoff", "--directions", "0,1", "--L", "4,5,6", "--trials", "400", "--points", "5", "--spread", "0.4", "--out", "t"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let t = std::fs::read_to_string(tmp.path().join("t/tradeoff.csv")).unwrap();
    assert!(t.starts_with("local,gate,t_c,"), "{t}");
}

#[test]
fn overhead_report_and_no_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let o = topoft(&["overhead", "--p1", "0.001", "--N", "1e6", "--u", "20", "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("o/report.json"));
    assert!((r["gamma"].as_f64().unwrap() - 15f64.log2()).abs() < 1e-12);
    assert!(r["winding"]["combinatorial"].as_f64().unwrap() > 0.0);
    let o = topoft(&["overhead", "--p1", "0.02", "--out", "o2"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no threshold"));
}

#[test]
fn oracle_quick_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = topoft(&["oracle", "--quick", "--out", "r"], tmp.path());
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let r = json(&tmp.path().join("r/report.json"));
    assert_eq!(r["failed"], 0);
    assert_eq!(r["checks"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(topoft(&["sweep", "--bogus"], tmp.path()).status.code(), Some(1));
    assert_eq!(topoft(&["--threads", "0", "analytic", "--p1", "0.01"], tmp.path()).status.code(), Some(1));
    assert_eq!(topoft(&["--help"], tmp.path()).status.code(), Some(0));
    std::fs::write(tmp.path().join("bad.json"), r#"{"experiment": "sweep", "family": "independent", "sizes": [4], "params": ["x"], "n_trials": 1, "seed": 1}"#).unwrap();
    let o = topoft(&["sweep", "--config", "bad.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("params[0]"), "{}", stderr(&o));
    // Too few sizes to fit is a runtime failure.
    std::fs::write(
        tmp.path().join("two.csv"),
        "L,p_or_q,model,n_trials,n_fail,rate,lo95,hi95\n8,0.01,x,100,10,0.1,0.05,0.15\n12,0.01,x,100,10,0.1,0.05,0.15\n",
    )
    .unwrap();
    assert_eq!(topoft(&["fit", "two.csv"], tmp.path()).status.code(), Some(2));
}
